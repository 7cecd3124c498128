"""Unit tests for the V2X shadowing simulator."""
