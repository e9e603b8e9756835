"""Concentration-based localization tests, median intervals, the N=2 criterion."""

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import ndtri

from .env import ChargeLaw, Environment
from .transfer import FULL, Params, pinned_logZ


class Decision(str, enum.Enum):
    LOCALIZED = "RejectH0_Localized"
    DELOCALIZED = "RejectH0_Delocalized"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class TestReport:
    lam: float
    h: float
    S: int
    n: int
    u_hat: float
    p_value: float
    decision: str
    master_seed: int
    penalty: float = 16.0

    def to_dict(self):
        return asdict(self)


# keep pytest from collecting the dataclass
TestReport.__test__ = False


class TaskFailed(RuntimeError):
    def __init__(self, index, cause):
        super().__init__(f"task {index} failed: {cause!r}")
        self.index = index


def mc_map(fn, n, workers=None, reducer=None, initial=None):
    """[fn(i) for i in range(n)], evaluated on a thread pool, in index order.

    The compiled kernels drop the GIL, so threads give real parallelism there.
    Results never depend on the worker count: each task derives its charges
    from (master seed, i) alone. With a reducer the results are folded left to
    right starting from ``initial``, so n = 0 returns ``initial``.
    """
    workers = workers or int(os.environ.get("COPOLYMER_WORKERS", os.cpu_count() or 1))

    def task(i):
        try:
            return fn(i)
        except Exception as exc:
            raise TaskFailed(i, exc) from exc

    if workers <= 1 or n <= 1:
        out = [task(i) for i in range(n)]
    else:
        with ThreadPoolExecutor(workers) as ex:
            out = list(ex.map(task, range(n)))
    if reducer is None:
        return out
    acc = initial
    for r in out:
        acc = reducer(acc, r)
    return acc


def concentration_penalty(law):
    if law.kind == "gaussian":
        raise ValueError("the concentration bound needs charges in [-1, 1]")
    if law.kind == "binary":
        return 16.0
    lo, hi = law.support()
    if lo < -1 or hi > 1:
        raise ValueError("the concentration bound needs charges in [-1, 1]")
    return 64.0


def p_value(u_hat, n, S, lam, penalty=16.0):
    """exp(-u^2 n / (penalty lam^2 S)); S counts charge variables."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    return float(math.exp(-u_hat * u_hat * n / (penalty * lam * lam * S)))


def sample_logZ(law, lam, h, S, n, master_seed, window=FULL, workers=None):
    if S % 2:
        raise ValueError("S must be even")
    if n < 1:
        raise ValueError("n must be positive")
    base = Environment(law=law, seed=int(master_seed))
    params = Params(lam, h)
    return np.array(mc_map(lambda i: pinned_logZ(base.for_sample(i), params, S, window),
                           n, workers))


def _report(law, lam, h, S, n, master_seed, window, sign, workers, sample=None):
    pen = concentration_penalty(law)
    if S % 2:
        raise ValueError("S must be even")
    if sample is None:
        sample = sample_logZ(law, lam, h, S, n, master_seed, window, workers)
    u = float(np.mean(sample))
    if sign * u > 0:
        p = p_value(u, n, S, lam, pen)
        dec = Decision.LOCALIZED if sign > 0 else Decision.DELOCALIZED
    else:
        p, dec = 1.0, Decision.INCONCLUSIVE
    rep = TestReport(lam, h, S, n, u, p, dec.value, int(master_seed), pen)
    return rep, sample


def localization_test(law, lam, h, S, n, master_seed=0, window=FULL, workers=None,
                      return_sample=False):
    """Test H0: E log Z_S(0) <= 0; rejected (localized) when the sample mean is > 0."""
    rep, sample = _report(law, lam, h, S, n, master_seed, window, +1, workers)
    return (rep, sample) if return_sample else rep


def delocalization_side_test(law, lam, h, S, n, master_seed=0, window=FULL, workers=None,
                             return_sample=False):
    """Test H0': E log Z_S(0) >= 0; rejected when the sample mean is < 0."""
    rep, sample = _report(law, lam, h, S, n, master_seed, window, -1, workers)
    return (rep, sample) if return_sample else rep


def median_ci(sample, level=0.95):
    """Order statistics n/2 -+ floor(a sqrt(n) / 2), 1-based, a = |Phi^-1((1-level)/2)|."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    if n < 30:
        raise ValueError("median_ci needs at least 30 samples")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    a = abs(float(ndtri((1 - level) / 2)))
    k = int(math.floor(a * math.sqrt(n) / 2))
    lo, hi = n // 2 - k, n // 2 + k
    return [float(x[max(lo, 1) - 1]), float(x[min(hi, n) - 1])]


def _pair_law(law, gh_order=80):
    """Support points and weights of omega_1 + omega_2."""
    if law.kind == "gaussian":
        t, w = np.polynomial.hermite_e.hermegauss(gh_order)
        return math.sqrt(2.0) * t, w / w.sum()
    v = np.asarray(law.values, dtype=float)
    p = np.asarray(law.probs, dtype=float)
    return np.add.outer(v, v).ravel(), np.multiply.outer(p, p).ravel()


def small_N_criterion(law, lam, h):
    """E log(1/2 + exp(-2 lam (omega_1 + omega_2 + 2h)) / 2); > 0 certifies localization."""
    s, w = _pair_law(law)
    t = -2.0 * lam * (s + 2.0 * h)
    return float(np.dot(w, np.logaddexp(0.0, t) - math.log(2.0)))
