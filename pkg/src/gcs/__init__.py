"""Exact simulation and verification of generalized cluster states over
finite group algebras: circuit construction, symbolic stabilizers,
measurements, symmetry operators, PEPS contraction, and quantum double
ground states by projection."""

__version__ = "0.1.0"
