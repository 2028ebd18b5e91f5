"""Canonical transformations in phase-space quantum mechanics."""
