"""Byte-signal document classification: load bytes as a signal, filter it,
extract a fixed-length feature vector and match it against per-class models."""

__version__ = "0.1.0"
