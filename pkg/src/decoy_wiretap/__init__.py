"""Secrecy capacities of binary optical wiretap channels with decoy preprocessing."""
__version__ = "0.1.0"
