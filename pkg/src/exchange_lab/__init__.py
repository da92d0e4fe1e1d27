"""Numerical lab for exchange phases: ring swaps, spin swaps, anyon phases,
non-abelian holonomies and braid-group representations (hbar = 1)."""

__version__ = "0.1.0"
