"""Reverse engineering of transpiled quantum classifiers, and dummy-parameter defenses."""

__version__ = "0.1.0"
