"""Utility modules for shockdecomp."""

from .output_manager import output, OutputManager

__all__ = ['output', 'OutputManager']