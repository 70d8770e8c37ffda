"""Tests for harmonic-mpa."""
