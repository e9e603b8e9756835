"""Conditioned local limit theorem and ballot identity checks by exact DP."""

import math

import numpy as np

from .walk import WalkSpec, endpoint_law, stay_positive_law

BINS = (0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 2.5, 3.0)


def _conditioned(spec, n):
    pc, xs, mass = stay_positive_law(spec, n)
    return xs, mass / pc


def _scale(spec, n):
    # lattice spacing 2 for the simple walk, 1 for the lazy walk; a_n = sigma sqrt(n)
    s = math.sqrt(spec.sigma2 * n)
    return s, spec.period


def _errors(spec, n):
    xs, cond = _conditioned(spec, n)
    s, step = _scale(spec, n)
    reach = xs % 2 == n % 2 if step == 2 else np.ones(xs.size, bool)
    u = xs[reach] / s
    dens = u * np.exp(-0.5 * u * u)
    return u, np.abs(s / step * cond[reach] - dens)


def conditioned_llt_error(n, spec=None):
    """sup over reachable x of |(a_n/c) P(S_n = x | C_n) - phi+(x/a_n)|."""
    if n < 2:
        raise ValueError("n must be >= 2")
    _, err = _errors(spec or WalkSpec.simple(), n)
    return float(err.max())


def ballot_check(n_max, spec=None):
    """max over n <= n_max and x of |u(n, x) - (x/n) P(S_n = x)| for the simple walk."""
    spec = spec or WalkSpec.simple()
    if spec.kind != "simple":
        raise ValueError("the exact ballot identity holds for the simple walk")
    qm, _, qp = spec.steps
    worst = 0.0
    # u(n, .) on x = 1..n, advanced in place alongside the free law
    u = np.zeros(n_max + 2)
    free = np.ones(1)
    for n in range(1, n_max + 1):
        if n == 1:
            u[1] = qp
        else:
            new = np.zeros_like(u)
            new[2:n + 1] = qp * u[1:n]
            new[1:n - 1] += qm * u[2:n]
            u = new
        free = np.convolve(free, [qm, 0.0, qp])
        x = np.arange(1, n + 1)
        pred = x / n * free[n + x]
        worst = max(worst, float(np.abs(u[1:n + 1] - pred).max()))
    return worst


def uniformity_report(n, spec=None, bins=BINS):
    """Rows (bin, x, error) with x the reachable site nearest bin * a_n.

    The last row is the sup over all reachable x.
    """
    spec = spec or WalkSpec.simple()
    u, err = _errors(spec, n)
    s, _ = _scale(spec, n)
    rows = []
    for b in bins:
        i = int(np.argmin(np.abs(u - b)))
        rows.append((b, int(round(u[i] * s)), float(err[i])))
    rows.append(("sup", -1, float(err.max())))
    return rows


def bin_mass(n, lo, hi, spec=None):
    """Conditioned probability that S_n / a_n lies in [lo, hi)."""
    spec = spec or WalkSpec.simple()
    xs, cond = _conditioned(spec, n)
    s, _ = _scale(spec, n)
    u = xs / s
    return float(cond[(u >= lo) & (u < hi)].sum())


__all__ = ["conditioned_llt_error", "ballot_check", "uniformity_report", "bin_mass",
           "endpoint_law"]
