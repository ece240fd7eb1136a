"""Unit test package for spin_motion."""
