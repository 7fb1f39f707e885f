"""Certified constructions of Fourier coefficient sequences and trigonometric polynomials."""

__version__ = "0.1.0"
