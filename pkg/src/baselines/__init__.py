"""Reference topologies and exhaustive tree analytics"""
