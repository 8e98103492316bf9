"""Nodes, positions, parameters and uplink trees"""
