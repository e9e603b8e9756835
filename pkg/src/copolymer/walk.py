"""Exact laws of the simple and lazy (Triple) walks by dynamic programming."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

FLUSH = 1e-300


@dataclass(frozen=True)
class WalkSpec:
    kind: str = "simple"
    p: float = 0.5

    def __post_init__(self):
        if self.kind not in ("simple", "triple"):
            raise ValueError(f"unknown walk kind {self.kind!r}")
        if self.kind == "triple" and not (0.0 < self.p < 0.5):
            raise ValueError("triple walk needs p in (0, 1/2)")
        if self.kind == "simple" and self.p != 0.5:
            object.__setattr__(self, "p", 0.5)

    @classmethod
    def simple(cls):
        return cls("simple")

    @classmethod
    def triple(cls, p):
        return cls("triple", float(p))

    @property
    def steps(self):
        """(P(-1), P(0), P(+1))."""
        if self.kind == "simple":
            return 0.5, 0.0, 0.5
        return self.p, 1.0 - 2.0 * self.p, self.p

    @property
    def sigma2(self):
        return 1.0 if self.kind == "simple" else 2.0 * self.p

    @property
    def period(self):
        return 2 if self.kind == "simple" else 1


@dataclass
class ReturnLaw:
    spec: WalkSpec
    k: np.ndarray  # k[n-1] = K(n)
    c_k_hat: float

    def __call__(self, n):
        return self.k[n - 1]


def _step(v, spec):
    """One convolution step of a mass vector with the step law."""
    qm, q0, qp = spec.steps
    out = np.empty(v.size + 2)
    out[:] = 0.0
    out[2:] += qp * v
    out[:-2] += qm * v
    if q0:
        out[1:-1] += q0 * v
    return out


def _cached_spec(spec):
    return (spec.kind, spec.p)


@lru_cache(maxsize=16)
def _return_law_cached(kind, p, n_max):
    spec = WalkSpec(kind, p)
    qm, q0, qp = spec.steps
    k = np.zeros(n_max)
    # mass on levels 1..n of the walk killed at 0; the negative side is symmetric
    pos = np.zeros(n_max + 2)
    k[0] = q0
    pos[1] = qp
    top = 1
    for n in range(2, n_max + 1):
        k[n - 1] = 2.0 * qm * pos[1]
        new = np.zeros_like(pos)
        new[2:top + 2] += qp * pos[1:top + 1]
        new[1:top + 1] += q0 * pos[1:top + 1]
        new[1:top] += qm * pos[2:top + 1]
        new[new < FLUSH] = 0.0
        pos = new
        top = min(top + 1, n_max)
    k.setflags(write=False)
    return k


def _richardson(k, spec):
    n_max = k.size
    if spec.kind == "simple":
        n2 = n_max - (n_max % 2)
        n1 = n2 - 2
    else:
        n2, n1 = n_max, n_max - 1
    if n1 < 1:
        return float("nan")
    f1 = n1 ** 1.5 * k[n1 - 1]
    f2 = n2 ** 1.5 * k[n2 - 1]
    return (n2 * f2 - n1 * f1) / (n2 - n1)


def return_law(spec, n_max):
    """First-return law K(n) = P(tau_1 = n) for n = 1..n_max.

    Parameters
    ----------
    spec : WalkSpec
    n_max : int
        Largest return time, at least 2.

    Returns
    -------
    ReturnLaw
        ``c_k_hat`` is n^{3/2} K(n) at the two largest lattice points,
        extrapolated linearly in 1/n.
    """
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    k = _return_law_cached(spec.kind, spec.p, int(n_max))
    return ReturnLaw(spec, k, _richardson(k, spec))


def endpoint_law(spec, n):
    """Mass of S_n on x = -n..n, returned as (xs, mass)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    v = np.ones(1)
    for _ in range(n):
        v = _step(v, spec)
    return np.arange(-n, n + 1), v


def stay_positive_law(spec, n):
    """P(S_1>0,...,S_n>0) and the restricted mass of S_n on x = 1..n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    qm, q0, qp = spec.steps
    v = np.zeros(n + 2)
    v[1] = qp
    for m in range(2, n + 1):
        new = np.zeros_like(v)
        new[2:m + 1] += qp * v[1:m]
        new[1:m] += q0 * v[1:m]
        new[1:m - 1] += qm * v[2:m]
        new[new < FLUSH] = 0.0
        v = new
    mass = v[1:n + 1]
    return float(mass.sum()), np.arange(1, n + 1), mass


def ladder_renewal_mass(spec, n, x):
    """u(n, x): probability that n is a strict ascending ladder epoch with S_n = x.

    By duality this is P(C_n, S_n = x).
    """
    if x < 1 or x > n:
        return 0.0
    _, xs, mass = stay_positive_law(spec, n)
    return float(mass[x - 1])


def simple_return_exact(n):
    """Closed form K(n) for the simple walk (0 at odd n), vectorized."""
    n = np.asarray(n)
    m = n // 2
    from scipy.special import gammaln
    with np.errstate(divide="ignore", invalid="ignore"):
        logk = (gammaln(2 * m + 1) - 2 * gammaln(m + 1) - np.log(2 * m - 1.0)
                - 2 * m * np.log(2.0))
        out = np.where((n % 2 == 0) & (n > 0), np.exp(logk), 0.0)
    return out


def log_simple_return_exact(n):
    """log K(n) for even n >= 2 of the simple walk."""
    from scipy.special import gammaln
    m = np.asarray(n, dtype=float) / 2.0
    return (gammaln(2 * m + 1) - 2 * gammaln(m + 1) - np.log(2 * m - 1.0)
            - 2 * m * np.log(2.0))
