"""Simulator for RIS-assisted indoor RSS fingerprint databases with KNN evaluation."""

__version__ = "0.1.0"
