"""Numerical tools for random copolymers at a selective interface.

Modules
-------
walk
    Exact return-time and positivity laws of the simple and lazy walks.
env
    Charge laws, reproducible environments, bound curves, Cramer functional.
transfer
    Partition-function recursion with full or restricted windows.
stats
    Concentration-based localization tests and median intervals.
deloc
    Endpoint-law distances, critical-point estimates, stretch certificates.
periodic
    Periodic copolymer and pinning models via Perron-Frobenius theory.
cocycle
    Annealed free energy of local disorder functions and coboundary tests.
fluct
    Conditioned local limit theorem and ballot identity checks.
cli
    Command-line driver (``python -m copolymer``).
"""

__version__ = "0.1.0"
