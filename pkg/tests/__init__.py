"""Test suite for shockdecomp."""