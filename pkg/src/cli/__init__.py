"""Command-line interface for shockdecomp."""

__version__ = "0.1.0"
