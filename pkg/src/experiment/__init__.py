"""Experiment configuration, dispatch and result output"""

__version__ = "1.0.0"
