"""Numeric and enumeration utilities."""
