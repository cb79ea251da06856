"""Positive solutions of (a x')' + b F(x) = 0 on the half-line with x(0) = 0 and x -> 0."""

__version__ = "0.1.0"
