"""Test suite for the V2X shadowing simulator."""
