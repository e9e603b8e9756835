"""Brute-force enumerations used as independent oracles."""

import itertools

import numpy as np


def _all_paths(N):
    bits = (np.arange(2 ** N)[:, None] >> np.arange(N)[None, :]) & 1
    S = np.concatenate([np.zeros((2 ** N, 1), int), np.cumsum(2 * bits - 1, axis=1)], axis=1)
    return S


def copolymer_endpoints(w, lam, h):
    """{x: Z(x)} summing over all 2^N paths; bond n is below when S_{n-1} + S_n < 0."""
    w = np.asarray(w, dtype=float)
    N = w.size
    S = _all_paths(N)
    below = (S[:, :-1] + S[:, 1:]) < 0
    wt = np.exp(-2 * lam * (below * (w + h)).sum(axis=1)) / 2 ** N
    ends = S[:, -1]
    return {int(x): float(wt[ends == x].sum()) for x in np.unique(ends)}


def copolymer_brute(w, lam, h):
    """(log Z(0), log Z) by enumeration."""
    z = copolymer_endpoints(w, lam, h)
    return np.log(z.get(0, 0.0)), np.log(sum(z.values()))


def walk_paths(steps, probs, n):
    """Yield (path positions S_1..S_n, probability)."""
    for seq in itertools.product(range(len(steps)), repeat=n):
        p = np.prod([probs[i] for i in seq])
        if p == 0:
            continue
        yield np.cumsum([steps[i] for i in seq]), p


def walk_brute(spec, n):
    """First-return masses K(1..n), endpoint law and stay-positive law by enumeration."""
    qm, q0, qp = spec.steps
    steps, probs = (-1, 0, 1), (qm, q0, qp)
    K = np.zeros(n)
    end = {}
    pos = {}
    for s, p in walk_paths(steps, probs, n):
        zeros = np.nonzero(s == 0)[0]
        if zeros.size:
            K[zeros[0]] += p
        end[int(s[-1])] = end.get(int(s[-1]), 0.0) + p
        if (s > 0).all():
            pos[int(s[-1])] = pos.get(int(s[-1]), 0.0) + p
    return K, end, pos
