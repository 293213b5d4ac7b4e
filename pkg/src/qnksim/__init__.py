"""Simulator and verifier for quantum no-key three-pass protocols."""

__version__ = "0.1.0"
