"""Threshold-voltage obfuscated key storage: reliability and readout-attack analysis."""

__version__ = "0.1.0"
