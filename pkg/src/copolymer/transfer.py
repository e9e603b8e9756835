"""Transfer-matrix engine for the simple-walk copolymer.

The profile Z_M(y) = Z_{2M}(2y) is advanced two monomers at a time. Bonds of
the pair (2M+1, 2M+2) lie below the interface iff S_{2M+1} < 0, and then
carry the factor alpha_M = exp(-2 lam (omega_{2M+1} + omega_{2M+2} + 2h)).
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import gammaln

from . import _kernels
from .env import Environment, log_mgf
from .walk import log_simple_return_exact

CHUNK = 1 << 16  # pairs per charge-generation chunk
ORACLE_CAP = 5000


@dataclass(frozen=True)
class Params:
    lam: float
    h: float

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")


@dataclass(frozen=True)
class Window:
    mode: str = "full"
    A: float = 3.0
    B: float = 8.0
    N0: int = 1000

    @classmethod
    def restricted(cls, A=3.0, B=8.0, N0=1000):
        if A <= 0 or B <= 0 or N0 < 1:
            raise ValueError("window needs A, B > 0 and N0 >= 1")
        return cls("restricted", float(A), float(B), int(N0))

    @property
    def is_restricted(self):
        return self.mode == "restricted"

    def half_width(self, m_max):
        if not self.is_restricted:
            return m_max
        w = max(self.N0 // 2 + 1, math.ceil(max(self.A, self.B) * math.sqrt(m_max)) + 1)
        return min(m_max, w)


FULL = Window()


class Profile:
    """Linear weights at y = lo-off .. hi-off with an accumulated log scale."""

    def __init__(self, width, M=0):
        self.z = np.zeros(2 * width + 3)
        self.off = width + 1
        self.z[self.off] = 1.0
        self.lo = self.hi = self.off
        self.M = M
        self.log_scale = 0.0

    def copy(self):
        p = Profile.__new__(Profile)
        p.z, p.off, p.lo, p.hi = self.z.copy(), self.off, self.lo, self.hi
        p.M, p.log_scale = self.M, self.log_scale
        return p

    @property
    def y(self):
        return np.arange(self.lo - self.off, self.hi - self.off + 1)

    @property
    def logz(self):
        with np.errstate(divide="ignore"):
            return np.log(self.z[self.lo:self.hi + 1])

    def log_at(self, y):
        i = y + self.off
        if i < self.lo or i > self.hi or self.z[i] == 0.0:
            return -np.inf
        return math.log(self.z[i]) + self.log_scale

    def log_total(self):
        return math.log(self.z[self.lo:self.hi + 1].sum()) + self.log_scale

    def advance(self, log_alpha, window=FULL, kern=None):
        """Apply len(log_alpha) steps; returns the log Z(0) trace."""
        kern = kern or _kernels
        la = np.ascontiguousarray(log_alpha, dtype=float)
        need = self.M + la.size
        if need > self.off - 1 and not window.is_restricted:
            self._grow(need)
        elif window.is_restricted and window.half_width(need) > self.off - 1:
            self._grow(window.half_width(need))
        trace = np.empty(la.size)
        lo, hi, ds = kern.chain(self.z, self.off, self.lo, self.hi, self.M, la,
                                window.is_restricted, window.A, window.B, window.N0, trace)
        trace += self.log_scale
        self.lo, self.hi = lo, hi
        self.log_scale += ds
        self.M = need
        return trace

    def _grow(self, width):
        z = np.zeros(2 * width + 3)
        shift = width + 1 - self.off
        z[self.lo + shift:self.hi + shift + 1] = self.z[self.lo:self.hi + 1]
        self.z, self.off = z, width + 1
        self.lo += shift
        self.hi += shift


def log_alpha_pairs(w, params):
    w = np.asarray(w, dtype=float)
    return -2.0 * params.lam * (w[0::2] + w[1::2] + 2.0 * params.h)


def as_env(env):
    if isinstance(env, (list, tuple, np.ndarray)):
        return Environment.from_array(env)
    return env


def evolve(profile, w1, w2, params, window=FULL):
    """One pair-step of the recursion on a copy of the profile."""
    p = profile.copy()
    p.advance(log_alpha_pairs([w1, w2], params), window)
    return p


def run(env, params, N, window=FULL, trace=False, kern=None, offset=0):
    """Profile after N monomers, charges omega_{offset+1..offset+N}."""
    if N % 2:
        raise ValueError("N must be even")
    env = as_env(env)
    prof = Profile(window.half_width(N // 2))
    traces = []
    for a in range(0, N, 2 * CHUNK):
        b = min(N, a + 2 * CHUNK)
        w = env.generate(offset + a + 1, offset + b)
        t = prof.advance(log_alpha_pairs(w, params), window, kern)
        if trace:
            traces.append(t)
    if trace:
        return prof, (np.concatenate(traces) if traces else np.empty(0))
    return prof


def pinned_logZ(env, params, N, window=FULL, kern=None):
    """log Z_{N,omega}(0); a lower bound under a restricted window."""
    if N % 2:
        raise ValueError("N must be even")
    if N == 0:
        return 0.0
    return run(env, params, N, window, kern=kern).log_at(0)


def free_logZ(env, params, N, window=FULL, kern=None):
    """log Z_{N,omega}, summed over endpoints."""
    if N % 2:
        raise ValueError("N must be even")
    if N == 0:
        return 0.0
    return run(env, params, N, window, kern=kern).log_total()


def logZ_both(env, params, N, window=FULL, kern=None):
    prof = run(env, params, N, window, kern=kern)
    return prof.log_at(0), prof.log_total()


def endpoint_distribution(env, params, N, window=FULL, kern=None):
    """(x, P(S_N = x)) on the even lattice."""
    if N % 2:
        raise ValueError("N must be even")
    prof = run(env, params, N, window, kern=kern)
    z = prof.z[prof.lo:prof.hi + 1]
    tot = z.sum()
    if not tot > 0:
        raise RuntimeError("degenerate profile")
    return 2 * prof.y, z / tot


def annealed_logZ(law, params, N, pinned=False):
    """log E Z_{N,omega}: every pair carries M(-2 lam)^2 exp(-4 lam h)."""
    if N % 2:
        raise ValueError("N must be even")
    la = 2.0 * float(log_mgf(law, -2.0 * params.lam)) - 4.0 * params.lam * params.h
    prof = Profile(N // 2)
    if N:
        prof.advance(np.full(N // 2, la))
    return prof.log_at(0) if pinned else prof.log_total()


def excursion_oracle_logZ0(env, params, N, cap=ORACLE_CAP, all_lengths=False, kern=None):
    """log Z_{N,omega}(0) by summing over the last return to zero.

    Each excursion of length x spanning charges (n-x, n] has weight
    K(x) (1 + exp(-2t)) / 2 with t = lam * sum(omega) + lam * h * x.
    """
    if N % 2:
        raise ValueError("N must be even")
    if N > cap:
        raise ValueError(f"oracle cap {cap} exceeded")
    env = as_env(env)
    w = env.generate(1, N) if N else np.empty(0)
    cum = np.concatenate([[0.0], np.cumsum(w)])
    logk = np.full(N + 1, -np.inf)
    if N >= 2:
        logk[2::2] = log_simple_return_exact(np.arange(2, N + 1, 2))
    kern = kern or _kernels
    out = kern.excursion_logz0(np.ascontiguousarray(cum), float(params.lam),
                               float(params.h), logk)
    return out if all_lengths else float(out[-1])


def log_binom_return(N):
    """log P(S_N = 0) for the simple walk."""
    return gammaln(N + 1) - 2 * gammaln(N / 2 + 1) - N * math.log(2.0)


def with_h(params, h):
    return replace(params, h=h)

