"""Approximate GKP codeword design, evaluation and recovery."""

__version__ = "0.1.0"
