"""Microwave-loss analysis for TLS-limited superconducting resonators."""
__version__ = "0.1.0"
