"""Charge laws, reproducible environments, bound curves and the Cramer functional."""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import logsumexp, ndtri

BITS_PER_BLOCK = 256  # one Philox counter yields four 64-bit words
WORDS_PER_BLOCK = 4


@dataclass(frozen=True)
class ChargeLaw:
    kind: str = "binary"
    values: tuple = ()
    probs: tuple = ()

    @classmethod
    def binary(cls):
        return cls("binary", (-1.0, 1.0), (0.5, 0.5))

    @classmethod
    def gaussian(cls):
        return cls("gaussian")

    @classmethod
    def finite(cls, values, probs, scale=True):
        v = np.asarray(values, dtype=float)
        p = np.asarray(probs, dtype=float)
        if v.shape != p.shape or v.ndim != 1 or v.size < 1:
            raise ValueError("values and probs must be 1-d of equal length")
        if np.any(p <= 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probs must be positive and sum to 1")
        v = v - np.dot(p, v)
        if scale:
            var = np.dot(p, v * v)
            if var <= 0:
                raise ValueError("degenerate law")
            v = v / np.sqrt(var)
        order = np.argsort(v)
        return cls("finite", tuple(v[order]), tuple(p[order]))

    @classmethod
    def from_config(cls, cfg):
        if cfg in ("binary", None):
            return cls.binary()
        if cfg == "gaussian":
            return cls.gaussian()
        if isinstance(cfg, dict):
            return cls.finite(cfg["values"], cfg["probs"], cfg.get("scale", True))
        raise ValueError(f"unknown charge law {cfg!r}")

    @property
    def bounded(self):
        return self.kind != "gaussian"

    def support(self):
        if self.kind == "gaussian":
            return -np.inf, np.inf
        return self.values[0], self.values[-1]


def log_mgf(law, a):
    a = np.asarray(a, dtype=float)
    if law.kind == "gaussian":
        return 0.5 * a * a
    if law.kind == "binary":
        # log cosh without overflow
        x = np.abs(a)
        return x + np.log1p(np.exp(-2 * x)) - np.log(2.0)
    v = np.asarray(law.values)
    lp = np.log(law.probs)
    return logsumexp(lp + np.multiply.outer(a, v), axis=-1)


def mgf(law, a):
    """M(a) = E exp(a omega)."""
    return np.exp(log_mgf(law, a))


def dlog_mgf(law, a):
    """(log M)'(a), the mean of the tilted law."""
    a = np.asarray(a, dtype=float)
    if law.kind == "gaussian":
        return a
    if law.kind == "binary":
        return np.tanh(a)
    v = np.asarray(law.values)
    w = np.log(law.probs) + np.multiply.outer(a, v)
    w = np.exp(w - logsumexp(w, axis=-1, keepdims=True))
    return w @ v


def d2log_mgf(law, a):
    a = np.asarray(a, dtype=float)
    if law.kind == "gaussian":
        return np.ones_like(a)
    if law.kind == "binary":
        return 1.0 / np.cosh(a) ** 2
    v = np.asarray(law.values)
    w = np.log(law.probs) + np.multiply.outer(a, v)
    w = np.exp(w - logsumexp(w, axis=-1, keepdims=True))
    m = w @ v
    return w @ (v * v) - m * m


def h_m(law, m, lam):
    """Bound curve h^{(m)}(lam) = log M(-2 m lam) / (2 m lam)."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0) or np.any(np.asarray(m) <= 0):
        raise ValueError("lam and m must be positive")
    x = 2.0 * m * lam
    return log_mgf(law, -x) / x


def h_lower(law, lam):
    return h_m(law, 2.0 / 3.0, lam)


def h_upper(law, lam):
    return h_m(law, 1.0, lam)


def legendre_point(law, q, tol=1e-12, max_iter=200):
    """alpha solving (log M)'(alpha) = q by safeguarded Newton."""
    lo, hi = law.support()
    if not (lo < q < hi):
        raise ValueError("q must lie strictly inside the support hull")
    if law.kind == "binary":
        return float(np.arctanh(q))
    a_lo, a_hi = -1.0, 1.0
    while dlog_mgf(law, a_lo) > q:
        a_lo *= 2.0
    while dlog_mgf(law, a_hi) < q:
        a_hi *= 2.0
    a = 0.5 * (a_lo + a_hi)
    for _ in range(max_iter):
        g = dlog_mgf(law, a) - q
        if g > 0:
            a_hi = a
        else:
            a_lo = a
        d = d2log_mgf(law, a)
        step = g / d if d > 0 else np.inf
        nxt = a - step
        if not (a_lo < nxt < a_hi):
            nxt = 0.5 * (a_lo + a_hi)
        if abs(nxt - a) < tol:
            return float(nxt)
        a = nxt
    return float(a)


def cramer(law, q):
    """Sigma(q) = sup_a (a q - log M(a)).

    Raises ValueError outside the closed support hull; on the boundary of a
    finite law the value is -log P(omega = boundary).
    """
    q = float(q)
    lo, hi = law.support()
    if q < lo or q > hi:
        raise ValueError("q outside the support hull")
    if law.kind != "gaussian" and (q == lo or q == hi):
        return float(-np.log(law.probs[0] if q == lo else law.probs[-1]))
    if law.kind == "gaussian":
        return 0.5 * q * q
    a = legendre_point(law, q)
    return float(a * q - log_mgf(law, a))


def cramer_binary_closed(q):
    q = np.asarray(q, dtype=float)
    return 0.5 * (1 + q) * np.log1p(q) + 0.5 * (1 - q) * np.log1p(-q)


def critical_tilt_mean(law, lam):
    """q0 = (log M)'(-4 lam / 3), the maximizer in the certificate exponent."""
    return float(dlog_mgf(law, -4.0 * lam / 3.0))


# --- environments ---------------------------------------------------------

def _philox_words(key, first_block, n_blocks):
    bg = np.random.Philox(key=np.asarray(key, dtype=np.uint64),
                          counter=np.array([first_block, 0, 0, 0], dtype=np.uint64))
    return bg.random_raw(WORDS_PER_BLOCK * n_blocks)


def _binary_charges(key, a, b):
    """Charges with 0-based indices a..b-1 drawn one bit each."""
    blk0, blk1 = a // BITS_PER_BLOCK, (b - 1) // BITS_PER_BLOCK + 1
    words = _philox_words(key, blk0, blk1 - blk0)
    bits = np.unpackbits(words.view(np.uint8), bitorder="little")
    off = a - blk0 * BITS_PER_BLOCK
    bits = bits[off:off + (b - a)]
    return bits.astype(np.float64) * 2.0 - 1.0


def _uniforms(key, a, b):
    blk0, blk1 = a // WORDS_PER_BLOCK, (b - 1) // WORDS_PER_BLOCK + 1
    words = _philox_words(key, blk0, blk1 - blk0)
    off = a - blk0 * WORDS_PER_BLOCK
    words = words[off:off + (b - a)]
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


@dataclass(frozen=True)
class Environment:
    law: ChargeLaw = field(default_factory=ChargeLaw.binary)
    seed: int = 0
    sample: int = 0
    explicit: tuple = None
    direction: str = "forward"
    horizon: int = 0

    @classmethod
    def from_array(cls, values, law=None):
        return cls(law=law or ChargeLaw.binary(), explicit=tuple(float(x) for x in values))

    def for_sample(self, index):
        return replace(self, sample=int(index))

    def backward(self, N):
        """The environment read backwards from site N: omega^r_n = omega_{N+1-n}."""
        return replace(self, direction="backward", horizon=int(N))

    def forward(self):
        return replace(self, direction="forward", horizon=0)

    @property
    def key(self):
        return (int(self.seed) & 0xFFFFFFFFFFFFFFFF, int(self.sample) & 0xFFFFFFFFFFFFFFFF)

    def _raw(self, a, b):
        """Forward charges at 1-based sites a..b."""
        if b < a:
            return np.empty(0)
        if self.explicit is not None:
            if b > len(self.explicit) or a < 1:
                raise ValueError("explicit environment too short for the requested range")
            return np.asarray(self.explicit[a - 1:b], dtype=float)
        law = self.law
        if law.kind == "binary":
            return _binary_charges(self.key, a - 1, b)
        u = _uniforms(self.key, a - 1, b)
        if law.kind == "gaussian":
            return ndtri(u)
        cdf = np.cumsum(law.probs)
        idx = np.minimum(np.searchsorted(cdf, u, side="right"), len(law.values) - 1)
        return np.asarray(law.values)[idx]

    def generate(self, a, b):
        """Charges omega_a..omega_b (1-based, inclusive)."""
        if a > b:
            raise ValueError("empty range")
        if self.direction == "forward":
            return self._raw(a, b)
        N = self.horizon
        if a < 1 or b > N:
            raise ValueError("backward range must lie in [1, horizon]")
        return self._raw(N + 1 - b, N + 1 - a)[::-1].copy()

    def shifted(self, k):
        """theta^k omega, as an explicit environment view over generated charges."""
        return _Shifted(self, int(k))


class _Shifted:
    def __init__(self, base, k):
        self.base, self.k = base, k
        self.law = base.law

    def generate(self, a, b):
        return self.base.generate(a + self.k, b + self.k)

    def shifted(self, k):
        return _Shifted(self.base, self.k + k)


def generate(env, a, b):
    return env.generate(a, b)


def h_sat(charges, N):
    """max over n <= N/2 of -(omega_{2n-1} + omega_{2n}) / 2."""
    if N % 2:
        raise ValueError("N must be even")
    w = np.asarray(charges, dtype=float)
    if w.size < N:
        raise ValueError("charge array shorter than N")
    pairs = w[:N:2] + w[1:N:2]
    return float(np.max(-0.5 * pairs))
