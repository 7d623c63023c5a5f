"""CLI commands for shockdecomp."""
