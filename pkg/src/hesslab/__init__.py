"""Hess-Appel'rot systems: flows, Lax pairs, Poisson structures, Kowalevski exponents."""
__version__ = "0.1.0"
