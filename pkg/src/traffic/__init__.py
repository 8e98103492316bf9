"""Traffic aggregation and link queueing delay"""
