"""shockdecomp - regional labor supply shock decomposition."""

__version__ = "0.1.0"
