"""Utilities and the RS tree-formation game"""
