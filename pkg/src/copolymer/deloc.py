"""Delocalization diagnostics, critical-point estimates and stretch certificates."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import _kernels
from .env import (ChargeLaw, Environment, _philox_words, cramer, dlog_mgf,
                  h_lower, h_m, h_sat, log_mgf)
from .transfer import FULL, Params, Window, endpoint_distribution, pinned_logZ, run
from .walk import log_simple_return_exact

LOG_CPRIME = 2 * math.log(0.5 / math.sqrt(math.pi)) - math.log(8 * math.sqrt(2))
SCAN_WORDS = 1 << 15


class CertificateNotApplicable(ValueError):
    pass


class SaturatedEstimate(RuntimeError):
    pass


def meander_density(u):
    u = np.asarray(u, dtype=float)
    return np.where(u >= 0, u * np.exp(-0.5 * u * u), 0.0)


def meander_distance(env, params, twoN, window=FULL, kern=None):
    """l1 distance between the endpoint law and the lattice meander law.

    The polymer of size twoN sees the charges read backwards from twoN. The
    reference mass at even x is (2/sqrt(twoN)) phi+(x/sqrt(twoN)), the lattice
    spacing being 2.
    """
    if twoN % 2:
        raise ValueError("twoN must be even")
    benv = env.backward(twoN) if isinstance(env, Environment) else env
    x, p = endpoint_distribution(benv, params, twoN, window, kern)
    s = math.sqrt(twoN)
    ref_x = np.arange(0, int(6 * s) + 2, 2)
    ref = 2.0 / s * meander_density(ref_x / s)
    lo = min(x[0], ref_x[0])
    hi = max(x[-1], ref_x[-1])
    grid = np.zeros((hi - lo) // 2 + 1)
    grid[(x - lo) // 2] += p
    grid[(ref_x - lo) // 2] -= ref
    return float(np.abs(grid).sum())


def critical_h_estimate(env, lam, twoN, tol=1e-8, window=FULL, threshold=1.0,
                        h_hi=None, kern=None):
    """The h at which Z_{twoN}(0) equals the threshold (default 1).

    log Z(0) is strictly decreasing in h; the root is bracketed in
    [0, h_sat + 1] and refined by Brent's method to |log Z - log thr| <= tol.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    target = math.log(threshold)

    def f(h):
        return pinned_logZ(env, Params(lam, h), twoN, window, kern) - target

    lo = 0.0
    hi = h_hi
    if hi is None:
        w = env.generate(1, twoN) if not isinstance(env, np.ndarray) else env
        hi = h_sat(w, twoN) + 1.0
    flo = f(lo)
    if flo <= 0:
        raise SaturatedEstimate("log Z(0) <= threshold already at h = 0")
    fhi = f(hi)
    if fhi >= 0:
        raise SaturatedEstimate("no sign change below h_sat + 1")
    root = brentq(f, lo, hi, xtol=1e-14, rtol=1e-13, maxiter=200)
    # Brent's xtol controls h; tighten on the log Z scale by bisection if needed
    a, b = lo, hi
    val = f(root)
    it = 0
    while abs(val) > tol and it < 200:
        if val > 0:
            a = root
        else:
            b = root
        root = 0.5 * (a + b)
        val = f(root)
        it += 1
    return root


def fit_m(law, lam_star, h_hat, m_lo=1e-6, m_hi=1e3):
    """m solving h^{(m)}(lam_star) = h_hat (m -> h^{(m)} is increasing)."""
    sup = h_m(law, m_hi, lam_star)
    inf = h_m(law, m_lo, lam_star)
    if not (inf < h_hat < sup):
        raise ValueError("h_hat outside the range of m -> h^{(m)}(lam*)")
    return brentq(lambda m: h_m(law, m, lam_star) - h_hat, m_lo, m_hi,
                  xtol=1e-14, rtol=1e-15, maxiter=500)


# --- atypical stretches ----------------------------------------------------

@dataclass
class StretchTime:
    q: float
    M: int
    tau: int
    R: int
    found: bool = True


def _feed_env(scanner, env, step_cap):
    """Feed charges of env into scanner until it stops or step_cap sites."""
    fast = (isinstance(env, Environment) and env.explicit is None
            and env.direction == "forward" and env.law.kind == "binary")
    used = 0
    if fast:
        blk = 0
        while not scanner.done and used < step_cap:
            nblk = SCAN_WORDS // 4
            used += scanner.feed_bits(_philox_words(env.key, blk, nblk))
            blk += nblk
        return used
    chunk = 1 << 18
    a = 1
    limit = step_cap
    if isinstance(env, Environment) and env.explicit is not None:
        limit = min(step_cap, len(env.explicit) - len(env.explicit) % 2)
    while not scanner.done and a <= limit:
        b = min(a + chunk - 1, limit)
        if b < a + 1:
            break
        w = env.generate(a, b)
        used += 2 * scanner.feed(np.ascontiguousarray(w[0::2] + w[1::2]))
        a = b + 1
    return used


def find_stretch(env, q, M, step_cap=10 ** 9, kern=None):
    """tau_{M,q}: first even n closing a stretch of length >= M with mean <= q.

    R is the shortest such terminal stretch; M <= R <= 2M.
    """
    if M % 2 or M < 2:
        raise ValueError("M must be even and >= 2")
    lo, _ = env.law.support() if hasattr(env, "law") else (-np.inf, None)
    if q <= lo:
        raise ValueError("q must exceed the essential infimum of the charges")
    kern = kern or _kernels
    sc = kern.StretchScanner(float(q), int(M), int(2 * M + 2), 0, 0.0)
    _feed_env(sc, env, step_cap)
    if sc.done != 1:
        return StretchTime(q, M, -1, -1, found=False)
    return StretchTime(q, M, int(sc.tau), int(sc.R))


@dataclass
class Certificate:
    A: int
    eps: float
    q: float
    ell: int
    T: int
    R: int
    logZ0_at_T: float
    exact: bool
    log_bound: float
    log_stretch_bound: float
    sigma: float
    holds: bool
    extra: dict = field(default_factory=dict)


def certificate_log_bound(law, params, A, eps, q):
    """log of c' exp{(3/2) A [(-4 lam/3) q - Sigma(q) - (4 lam/3) h - log A / A - eps]}."""
    lam, h = params.lam, params.h
    sig = cramer(law, q)
    br = (-4 * lam / 3) * q - sig - (4 * lam / 3) * h - math.log(A) / A - eps
    return LOG_CPRIME + 1.5 * A * br


def smallest_A(law, params, eps, q, margin=0.0, A_max=10 ** 6):
    """Smallest even A for which the bound exceeds exp(margin)."""
    A = 2
    while A <= A_max:
        if certificate_log_bound(law, params, A, eps, q) > margin:
            return A
        A += 2
    raise ValueError("no admissible A (is h below the lower bound curve?)")


def critical_q(law, lam):
    """q0 = (log M)'(-4 lam/3); there (-4 lam/3) q0 - Sigma(q0) = log M(-4 lam/3)."""
    return float(dlog_mgf(law, -4.0 * lam / 3.0))


def _log_k(x):
    return float(log_simple_return_exact(np.array([x]))[0])


def certificate(env, params, A, eps, q=None, exact_cap=200_000, kcap=None,
                step_cap=10 ** 12, kern=None):
    """Evaluate the stretch-based lower bound on Z_{T}(0) along one environment.

    Z_T(0) is evaluated exactly by the transfer recursion when T <= exact_cap.
    Beyond that the value reported is the rigorous lower bound
    (1/2) K(T-R) Z_{R, theta^{T-R} omega}(0): one upper excursion to T-R
    followed by the exact pinned weight of the final stretch.
    """
    law = env.law
    lam, h = params.lam, params.h
    if h >= float(h_lower(law, lam)):
        raise CertificateNotApplicable("h must lie below the lower bound curve")
    if q is None:
        q = critical_q(law, lam)
    if not q < -h:
        raise CertificateNotApplicable("q must satisfy q < -h")
    if A % 2 or A < 2:
        raise ValueError("A must be even")
    kern = kern or _kernels
    sig = cramer(law, q)
    log_bound = certificate_log_bound(law, params, A, eps, q)
    kc = kcap or 4 * A
    while True:
        sc = kern.StretchScanner(float(q), int(A), int(kc), 1, sig + eps)
        _feed_env(sc, env, step_cap)
        if sc.done == 2:
            kc *= 2
            continue
        break
    if sc.done != 1:
        # censored: no ell within step_cap charges
        return Certificate(A, eps, q, -1, -1, -1, -np.inf, False, log_bound, -np.inf,
                           sig, False, {"censored": True, "scanned": int(sc.n) * 2,
                                        "kcur": int(sc.kcur)})
    T, ell, R = int(sc.tau), int(sc.ell), int(sc.R)
    if T <= exact_cap:
        logz = pinned_logZ(env, params, T, kern=kern)
        exact = True
    else:
        tail = run(env, params, R, offset=T - R, kern=kern).log_at(0)
        logz = (math.log(0.5) + _log_k(T - R) if T > R else 0.0) + tail
        exact = False
    if T > R:
        lsb = math.log(0.25) + _log_k(T - R) + _log_k(R) - 2 * lam * (q + h) * R
    else:
        lsb = math.log(0.5) + _log_k(R) - 2 * lam * (q + h) * R
    holds = bool(log_bound > 0 and logz >= log_bound)
    return Certificate(A, eps, q, ell, T, R, logz, exact, log_bound, lsb, sig, holds)


def first_passage_TC(env, params, C, N_cap, window=FULL, kern=None):
    """Smallest even N with Z_N(0) >= C, or None when N_cap is reached."""
    if C <= 1:
        raise ValueError("C must exceed 1")
    prof_env = env if not isinstance(env, (list, tuple, np.ndarray)) else Environment.from_array(env)
    from .transfer import Profile, log_alpha_pairs
    logC = math.log(C)
    prof = Profile(window.half_width(N_cap // 2))
    step = 2048
    done = 0
    while done < N_cap:
        b = min(N_cap, done + step)
        w = prof_env.generate(done + 1, b)
        tr = prof.advance(log_alpha_pairs(w, params), window, kern)
        hit = np.nonzero(tr >= logC)[0]
        if hit.size:
            return done + 2 * (int(hit[0]) + 1)
        done = b
    return None


def mean_with_tail_warning(values):
    """Empirical mean and whether the top decile holds more than half the mass."""
    v = np.sort(np.asarray(values, dtype=float))
    tot = v.sum()
    k = max(1, int(math.ceil(0.1 * v.size)))
    heavy = bool(tot > 0 and v[-k:].sum() > 0.5 * tot)
    return float(v.mean()), heavy
