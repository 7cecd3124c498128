"""Deterministic V2X sensor-fusion simulator with obstacle shadowing and relay selection."""

__version__ = "0.1.0"
