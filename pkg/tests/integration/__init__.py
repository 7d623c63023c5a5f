"""Integration tests for shockdecomp."""