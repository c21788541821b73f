"""Hybrid symbolic-execution toolkit for a Solidity subset."""

__version__ = "0.1.0"
