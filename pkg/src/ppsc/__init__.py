"""Gossip-based privacy-preserving summation: mechanisms, symbolic analysis and attacks."""

__version__ = "0.1.0"
