"""Numerics for modular-form L-functions on the critical line.

Modules: arithforms (coefficients, characters), special (gamma, Bessel,
cutoff, quadrature), lfunction, farey, voronoi, statphase, sieve, cli.
"""
__version__ = "0.1.0"
