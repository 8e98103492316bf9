"""Physical-layer link metrics"""
