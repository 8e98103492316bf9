"""Snapshots, mobility runs and Monte-Carlo sweeps"""
