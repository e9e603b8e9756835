"""Periodic inhomogeneous models: kernels, Perron-Frobenius data, asymptotics.

Charges are T-periodic and indexed by residue class beta in Z/TZ; the input
arrays list omega_1 .. omega_T, so class beta holds omega_n for n = beta mod T.

Two return-time laws are supported. The lazy walk ('triple', steps -1, 0, +1
with probabilities p, 1-2p, p) has a flat one-step excursion with its own
energy. The simple walk is used in paired time ('paired'): one time unit is
two steps, so K(1) = 1/2 and every excursion has a sign.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import zeta

from .walk import WalkSpec, return_law, simple_return_exact

REGIME_TOL = 1e-9
T_MAX = 64


class RegimeError(ValueError):
    pass


class ReducibleMatrix(ValueError):
    pass


class Regime(str, enum.Enum):
    LOCALIZED = "Localized"
    DELOCALIZED = "StrictlyDeloc"
    CRITICAL = "Critical"


# --- return-time laws ---------------------------------------------------------

@dataclass(frozen=True)
class ReturnKernel:
    kind: str = "triple"
    p: float = 0.3

    def __post_init__(self):
        if self.kind not in ("triple", "paired"):
            raise ValueError("kind must be 'triple' or 'paired'")
        if self.kind == "triple" and not 0 < self.p < 0.5:
            raise ValueError("triple walk needs p in (0, 1/2)")

    @property
    def flat(self):
        """Whether x = 1 is a flat step (no sign) rather than a signed excursion."""
        return self.kind == "triple"

    @property
    def c_K(self):
        if self.kind == "triple":
            return math.sqrt(self.p / math.pi)
        return 0.5 / math.sqrt(math.pi)

    @property
    def K1(self):
        return 1.0 - 2.0 * self.p if self.kind == "triple" else 0.5

    def _root(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "triple":
            return np.sqrt(1 - z) * np.sqrt(1 - (1 - 4 * self.p) * z)
        return np.sqrt(1 - z)

    def gf(self, z):
        """sum_x K(x) z^x for |z| <= 1, as (1 - root^2) / (1 + root)."""
        z = np.asarray(z, dtype=complex)
        if self.kind == "triple":
            c = 1 - 4 * self.p
            num = z * (1 + c) - c * z * z
        else:
            num = z
        return num / (1.0 + self._root(z))

    def gf_real(self, b):
        """sum_x K(x) e^{-bx}, b >= 0, without cancellation near b = 0."""
        u = -math.expm1(-b)
        if self.kind == "triple":
            c = 1 - 4 * self.p
            return 1.0 - math.sqrt(u * (1 - c * math.exp(-b)))
        return 1.0 - math.sqrt(u)

    def dgf(self, z):
        """z d/dz of the generating function: sum_x x K(x) z^x."""
        z = np.asarray(z, dtype=complex)
        if self.kind == "triple":
            c = 1 - 4 * self.p
            r = self._root(z)
            return z * ((1 - z) * c + (1 - c * z)) / (2 * r)
        return z / (2 * np.sqrt(1 - z))

    def masses(self, n_max):
        """K(1..n_max)."""
        if self.kind == "triple":
            return return_law(WalkSpec.triple(self.p), n_max).k[:n_max].copy()
        return simple_return_exact(2 * np.arange(1, n_max + 1))


SERIES_B = 0.1


def class_sums(rk, T, b, derivative=False):
    """S_r(b) = sum_{x = r mod T} K(x) e^{-bx} (x K(x) e^{-bx} if derivative).

    Roots-of-unity filter of the closed form for small b; for larger b the
    filter would cancel catastrophically, and the series converges fast.
    """
    if b >= SERIES_B:
        n = T + int(math.ceil(45.0 / b)) + 2
        n = 1 << (n - 1).bit_length()  # reuse the cached return law
        x = np.arange(1, n + 1)
        terms = rk.masses(n) * np.exp(-b * x)
        if derivative:
            terms = terms * x
        return np.bincount(x % T, weights=terms, minlength=T)
    s = math.exp(-b)
    j = np.arange(T)
    roots = np.exp(2j * np.pi * j / T)
    vals = rk.dgf(roots * s) if derivative else rk.gf(roots * s)
    if not derivative:
        vals = np.asarray(vals, dtype=complex)
        vals[0] = rk.gf_real(b)
    r = np.arange(T)
    phase = np.exp(-2j * np.pi * np.outer(r, j) / T)
    return (phase @ vals).real / T


# --- models -------------------------------------------------------------------

def _by_class(a, T):
    a = np.asarray(a, dtype=float)
    if a.shape != (T,):
        raise ValueError("charge arrays must all have length T")
    return np.roll(a, 1)  # class 0 holds omega_T


@dataclass
class PeriodicModel:
    """Normalized model: the above-interface charge is zero after the reduction."""
    T: int
    w_minus: np.ndarray  # by class, omega^(-1) - omega^(+1)
    w0: np.ndarray
    w0_tilde: np.ndarray  # omega~^(0) - omega^(+1)
    h_w: float
    Sigma: np.ndarray
    walk: ReturnKernel = field(default_factory=ReturnKernel)
    swapped: bool = False

    @classmethod
    def from_charges(cls, w_plus, w_minus, w0=None, w0_tilde=None, walk=None):
        wp = np.asarray(w_plus, dtype=float)
        T = wp.size
        if not 1 <= T <= T_MAX:
            raise ValueError(f"period must lie in 1..{T_MAX}")
        wm = np.asarray(w_minus, dtype=float)
        w0 = np.zeros(T) if w0 is None else np.asarray(w0, dtype=float)
        w0t = np.zeros(T) if w0_tilde is None else np.asarray(w0_tilde, dtype=float)
        h = wp.mean() - wm.mean()
        swapped = h < 0
        if swapped:
            wp, wm, h = wm, wp, -h
        if abs(h) < 1e-14:
            h = 0.0
        wm_n = _by_class(wm - wp, T)
        w0_c = _by_class(w0, T)
        w0t_c = _by_class(w0t - wp, T)
        inc = np.roll(wm_n, -1) + h  # class a -> a+1 increment (omega_{a+1} + h)
        v = np.concatenate([[0.0], np.cumsum(inc[:-1])])
        if abs(v[-1] + inc[-1]) > 1e-9 * max(1.0, np.abs(inc).sum()):
            raise ValueError("centering failed")
        sigma = v[None, :] - v[:, None]
        return cls(T, wm_n, w0_c, w0t_c, float(h), sigma, walk or ReturnKernel(), swapped)

    @classmethod
    def from_config(cls, cfg):
        if cfg.get("walk", "triple") == "paired":
            walk = ReturnKernel("paired", 0.5)
        else:
            walk = ReturnKernel("triple", float(cfg.get("p", 0.3)))
        return cls.from_charges(cfg["w_plus"], cfg["w_minus"], cfg.get("w0"),
                                cfg.get("w0_tilde"), walk)

    @classmethod
    def pinning(cls, beta0, walk=None):
        b = np.atleast_1d(np.asarray(beta0, dtype=float))
        z = np.zeros(b.size)
        return cls.from_charges(z, z, b, z, walk)

    @classmethod
    def paired_copolymer(cls, omega, lam, h):
        """Simple-walk copolymer in paired time.

        A pair below the interface weighs exp(-2 lam (omega_{2n-1} + omega_{2n} + 2h)).
        """
        w = np.asarray(omega, dtype=float)
        if w.size % 2:
            raise ValueError("omega needs an even period")
        d = -2.0 * lam * (w[0::2] + w[1::2] + 2.0 * h)
        z = np.zeros(d.size)
        return cls.from_charges(z, d, z, z, ReturnKernel("paired", 0.5))

    @property
    def pathological_candidate(self):
        return self.h_w == 0.0 and float(np.abs(self.Sigma).max()) > 1e-12


def _phi1(model, beta):
    return model.w0[beta] + model.w0_tilde[beta]


def build_phi(model, alpha, beta, ell):
    """Energy of an excursion of length ell from class alpha to class beta."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    T = model.T
    if (alpha + ell - beta) % T:
        return 0.0
    if ell == 1 and model.walk.flat:
        return float(_phi1(model, beta))
    t = -ell * model.h_w + model.Sigma[alpha, beta]
    return float(model.w0[beta] + np.logaddexp(0.0, t) - math.log(2.0))


def tilted_B(model, b=0.0, derivative=False):
    """sum_x M(x) e^{-bx} (or sum_x x M(x) e^{-bx}) in closed form."""
    T, rk = model.T, model.walk
    h = model.h_w
    S0 = class_sums(rk, T, b, derivative)
    Sh = class_sums(rk, T, b + h, derivative)
    al = np.arange(T)[:, None]
    be = np.arange(T)[None, :]
    r = (be - al) % T
    e0 = np.exp(model.w0)[None, :]
    B = e0 * (0.5 * S0[r] + 0.5 * np.exp(model.Sigma) * Sh[r])
    if rk.flat:
        # x = 1 is a flat step: replace its signed-excursion weight
        one = r == (1 % T)
        signed = e0 * 0.5 * (1 + np.exp(model.Sigma - h))
        flat = np.exp(_phi1(model, np.arange(T)))[None, :]
        corr = rk.K1 * math.exp(-b) * (flat - signed)
        B = B + np.where(one, corr, 0.0)
    return B


def tail_matrices(model):
    """(L, Ltilde): x^{3/2} M(x) -> L and sqrt(l) P(l) e^{Phi~(l)} -> Ltilde."""
    cK = model.walk.c_K
    e0 = np.exp(model.w0)[None, :]
    if model.h_w == 0.0:
        L = cK * 0.5 * (1 + np.exp(model.Sigma)) * e0
        Lt = cK * (1 + np.exp(model.Sigma))
    else:
        L = cK * 0.5 * np.repeat(e0, model.T, axis=0)
        Lt = np.full((model.T, model.T), cK)
    return L, Lt


@dataclass
class Kernel:
    M: np.ndarray  # (X_cut+1, T, T), M[0] = 0
    L: np.ndarray
    Ltilde: np.ndarray
    X_cut: int
    B: np.ndarray
    tail: np.ndarray  # B minus the explicit sum up to X_cut
    tail_approx: np.ndarray  # L times the Hurwitz tail of x^{-3/2}
    tail_bound: float
    model: PeriodicModel = None


def _mass_array(model, X_cut):
    T = model.T
    K = model.walk.masses(X_cut)
    x = np.arange(1, X_cut + 1)
    M = np.zeros((X_cut + 1, T, T))
    for a in range(T):
        for b in range(T):
            sel = (x - (b - a)) % T == 0
            xs = x[sel]
            t = -xs * model.h_w + model.Sigma[a, b]
            phi = model.w0[b] + np.logaddexp(0.0, t) - math.log(2.0)
            if model.walk.flat and xs.size and xs[0] == 1:
                phi[0] = _phi1(model, b)
            M[xs, a, b] = np.exp(phi) * K[xs - 1]
    return M


def build_kernel(model, X_cut=10_000):
    T = model.T
    if X_cut < 10 * T:
        raise ValueError("X_cut must be at least 10 T")
    M = _mass_array(model, X_cut)
    B = tilted_B(model, 0.0)
    L, Lt = tail_matrices(model)
    tail = B - M.sum(axis=0)
    approx = np.zeros((T, T))
    for a in range(T):
        for b in range(T):
            r = (b - a) % T
            x0 = X_cut + 1 + ((r - (X_cut + 1)) % T)
            approx[a, b] = L[a, b] * T ** -1.5 * zeta(1.5, x0 / T)
    bound = float(np.abs(tail).max())
    return Kernel(M, L, Lt, X_cut, B, tail, approx, bound, model)


# --- Perron-Frobenius -----------------------------------------------------------

@dataclass
class PFData:
    eigval: float
    zeta: np.ndarray
    xi: np.ndarray
    residual: float


def _irreducible(A):
    T = A.shape[0]
    R = (A > 0).astype(np.int64) + np.eye(T, dtype=np.int64)
    P = np.eye(T, dtype=np.int64)
    for _ in range(max(T - 1, 1)):
        P = np.minimum(P @ R, 1)
    return bool(P.all())


def pf(A, power_iters=200):
    """Perron-Frobenius eigenvalue with positive left/right vectors, sum zeta xi = 1.

    A direct eigensolve gives the starting point; power iteration then polishes
    both vectors and the two eigenvalue estimates are required to agree.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("square matrix expected")
    if (A < 0).any():
        raise ValueError("nonnegative matrix expected")
    if not _irreducible(A):
        raise ReducibleMatrix("matrix is reducible")
    w, V = np.linalg.eig(A)
    k = int(np.argmax(w.real))
    lam = float(w[k].real)
    xi = np.abs(V[:, k].real)
    wl, U = np.linalg.eig(A.T)
    zeta_v = np.abs(U[:, int(np.argmax(wl.real))].real)
    # a few shifted power steps (shift keeps periodic matrices aperiodic)
    shift = lam if lam > 0 else 1.0
    As = A + shift * np.eye(A.shape[0])
    for _ in range(power_iters):
        nx = As @ xi
        nz = zeta_v @ As
        nx /= np.linalg.norm(nx)
        nz /= np.linalg.norm(nz)
        done = np.allclose(nx, xi, rtol=0, atol=1e-15) and np.allclose(nz, zeta_v, rtol=0, atol=1e-15)
        xi, zeta_v = nx, nz
        if done:
            break
    lam_pow = float(zeta_v @ A @ xi / (zeta_v @ xi))
    if abs(lam_pow - lam) > 1e-9 * max(1.0, abs(lam)):
        raise RuntimeError("eigensolver and power iteration disagree")
    xi = xi / math.sqrt(zeta_v @ xi)
    zeta_v = zeta_v / (zeta_v @ xi)
    res = max(float(np.abs(A @ xi - lam_pow * xi).max()),
              float(np.abs(zeta_v @ A - lam_pow * zeta_v).max()))
    return PFData(lam_pow, zeta_v, xi, res)


def delta(model):
    return pf(tilted_B(model, 0.0)).eigval


def Delta(model, b):
    return pf(tilted_B(model, b)).eigval


def classify(d, tol=REGIME_TOL):
    if abs(d - 1.0) <= tol:
        return Regime.CRITICAL
    return Regime.LOCALIZED if d > 1.0 else Regime.DELOCALIZED


@dataclass
class FreeEnergy:
    F: float
    mu: float
    mu_fd: float
    zeta: np.ndarray
    xi: np.ndarray


def free_energy(model, kernel=None, tol=1e-12):
    """F with Delta(F) = 1 and mu = -Delta'(F), analytic and by finite difference."""
    d0 = Delta(model, 0.0)
    if d0 <= 1.0 + REGIME_TOL:
        raise RegimeError("free energy is zero: delta <= 1")
    hi = 1.0
    while Delta(model, hi) >= 1.0:
        hi *= 2.0
    F = brentq(lambda b: Delta(model, b) - 1.0, 0.0, hi, xtol=1e-300, rtol=1e-15, maxiter=500)
    data = pf(tilted_B(model, F))
    if abs(data.eigval - 1.0) > tol:
        raise RuntimeError("free-energy root not resolved to tolerance")
    D = tilted_B(model, F, derivative=True)
    mu = float(data.zeta @ D @ data.xi)
    db = min(1e-5 * max(F, 1.0), 0.02 * F)

    def central(step):
        if F > step:
            return -(Delta(model, F + step) - Delta(model, F - step)) / (2 * step)
        return -(-3 * Delta(model, F) + 4 * Delta(model, F + step)
                 - Delta(model, F + 2 * step)) / (2 * step)

    # Richardson step: Delta has sqrt(b)-type curvature when F is small
    mu_fd = (4 * central(db / 2) - central(db)) / 3
    return FreeEnergy(float(F), mu, float(mu_fd), data.zeta, data.xi)


@dataclass
class RegimeReport:
    delta: float
    regime: Regime
    F: float
    mu: float
    constants: np.ndarray
    pathological: bool
    zeta: np.ndarray = None
    xi: np.ndarray = None


def _resolvent(B):
    return np.linalg.inv(np.eye(B.shape[0]) - B)


def asymptotic_constants(model, kernel=None, report=None):
    """C(eta) for eta = 0..T-1 in the regime of the model (alpha = class 0)."""
    T = model.T
    B = tilted_B(model, 0.0)
    L, _ = tail_matrices(model)
    d = pf(B).eigval
    reg = classify(d)
    if reg is Regime.LOCALIZED:
        fe = free_energy(model)
        return reg, fe.xi[0] * fe.zeta * T / fe.mu
    if reg is Regime.DELOCALIZED:
        if abs(d - 1.0) < 1e3 * REGIME_TOL:
            raise RegimeError("too close to criticality")
        R = _resolvent(B)
        return reg, (R @ L @ R)[0]
    data = pf(B)
    den = float(data.zeta @ L @ data.xi)
    return reg, T * T / (2 * math.pi) * data.xi[0] * data.zeta / den


def analyze(model, kernel=None):
    B = tilted_B(model, 0.0)
    data = pf(B)
    reg = classify(data.eigval)
    reg, C = asymptotic_constants(model)
    F = mu = 0.0
    zeta_v, xi = data.zeta, data.xi
    if reg is Regime.LOCALIZED:
        fe = free_energy(model)
        F, mu, zeta_v, xi = fe.F, fe.mu, fe.zeta, fe.xi
    path = bool(data.eigval <= 1.0 + REGIME_TOL and model.pathological_candidate)
    return RegimeReport(data.eigval, reg, F, mu, C, path, zeta_v, xi)


def growth(reg, N, F=0.0):
    """The N-dependence multiplying C in each regime."""
    if reg is Regime.LOCALIZED:
        return math.exp(F * N)
    if reg is Regime.DELOCALIZED:
        return N ** -1.5
    return N ** -0.5


# --- exact finite-size partition functions ---------------------------------------

def exact_partition(kernel, N_max, tilt=0.0):
    """Z(x) e^{-tilt x} for x = 0..N_max from Z = 1{x=0} + M * Z."""
    if N_max > kernel.X_cut:
        raise ValueError("N_max exceeds the kernel cutoff")
    T = kernel.M.shape[1]
    Mt = kernel.M[:N_max + 1] * np.exp(-tilt * np.arange(N_max + 1))[:, None, None]
    Z = np.zeros((N_max + 1, T, T))
    Z[0] = np.eye(T)
    for x in range(1, N_max + 1):
        Z[x] = np.einsum("yab,ybc->ac", Mt[1:x + 1], Z[x - 1::-1])
    return Z


# --- limit kernels and sign parameters ---------------------------------------------

@dataclass
class LimitKernel:
    Gamma: np.ndarray  # (X_cut+1, T, T)
    escape: np.ndarray  # mass at x = infinity, per alpha
    tail: np.ndarray  # mass beyond X_cut, per alpha
    row_sums: np.ndarray  # explicit + tail + escape


def limit_kernels(model, kernel, eta=0, kind="c"):
    B = kernel.B
    T = model.T
    reg = classify(pf(B).eigval)
    if reg is Regime.LOCALIZED:
        fe = free_energy(model)
        damp = np.exp(-fe.F * np.arange(kernel.X_cut + 1))[:, None, None]
        G = kernel.M * damp * (fe.xi[None, None, :] / fe.xi[None, :, None])
        full = tilted_B(model, fe.F) * fe.xi[None, :] / fe.xi[:, None]
        tail = full.sum(1) - G.sum(axis=(0, 2))
        esc = np.zeros(T)
    elif reg is Regime.CRITICAL:
        data = pf(B)
        G = kernel.M * (data.xi[None, None, :] / data.xi[None, :, None])
        tail = (kernel.tail * data.xi[None, :] / data.xi[:, None]).sum(1)
        esc = np.zeros(T)
    else:
        R = _resolvent(B)
        L, Lt = kernel.L, kernel.Ltilde
        if kind == "c":
            Lam = R @ L @ R
            mu = L @ R
        elif kind == "f":
            Lam = R @ Lt
            mu = Lt
        else:
            raise ValueError("kind must be 'c' or 'f'")
        w = Lam[:, eta]
        G = kernel.M * (w[None, None, :] / w[None, :, None])
        tail = (kernel.tail * w[None, :] / w[:, None]).sum(1)
        esc = mu[:, eta] / w
    rows = G.sum(axis=(0, 2)) + tail + esc
    return LimitKernel(G, esc, tail, rows)


def rho_plus(model, z, alpha, beta):
    return 1.0 / (1.0 + math.exp(-z * model.h_w + model.Sigma[alpha, beta]))


def sign_parameters(model, eta=0):
    """Limiting probabilities of a positive excursion, per regime formula."""
    B = tilted_B(model, 0.0)
    L, Lt = tail_matrices(model)
    cK = model.walk.c_K
    half = cK * 0.5 * np.exp(model.w0)
    out = {}
    data = pf(B)
    reg = classify(data.eigval)
    if reg is Regime.CRITICAL:
        z, x = data.zeta, data.xi
        out["p_eq"] = float(z.sum() * (half @ x) / (z @ L @ x))
        out["q_eq"] = float(cK * z.sum() / (z @ Lt[:, eta]))
    if reg is Regime.DELOCALIZED:
        R = _resolvent(B)
        num = R[0].sum() * (half @ R[:, eta])
        out["p_del_c"] = float(num / (R @ L @ R)[0, eta])
        out["p_del_f"] = float(R[0].sum() * cK / (R @ Lt)[0, eta])
    return out


def c_beta(model, beta):
    data = pf(tilted_B(model, 0.0))
    if classify(data.eigval) is not Regime.CRITICAL:
        raise RegimeError("c_beta is defined at criticality")
    L, _ = tail_matrices(model)
    return float((data.zeta @ L @ data.xi) / (data.zeta[beta] * data.xi[beta]))


def return_time_law(kernel, beta, N_max):
    """Law q(x) of the return time to class beta under the critical kernel."""
    Z = exact_partition(kernel, N_max)
    U = Z[:, beta, beta]
    q = np.zeros(N_max + 1)
    for x in range(1, N_max + 1):
        q[x] = U[x] - np.dot(q[1:x], U[x - 1:0:-1])
    return q


# --- critical curves ---------------------------------------------------------------

def critical_curve_periodic(family, lam, tol=1e-12, h_hi=None):
    """h_c(lam) solving delta(family(lam, h)) = 1 by bracketing in h."""
    def g(h):
        return delta(family(lam, h)) - 1.0

    g0 = g(0.0)
    if g0 <= 0:
        raise RegimeError("delta <= 1 already at h = 0")
    hi = h_hi or 1.0
    while g(hi) >= 0:
        hi *= 2.0
        if hi > 1e6:
            raise RegimeError("no sign change in h")
    return brentq(g, 0.0, hi, xtol=tol * 1e-6, rtol=1e-15, maxiter=500)
