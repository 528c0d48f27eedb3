"""Render figures from mwemit CSV outputs.

This package never imports mwemit; the CSV files (with their provenance
headers) are the whole interface.
"""

__version__ = "0.1.0"
