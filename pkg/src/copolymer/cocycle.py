"""Centered local functions of IID letters: annealed free energy and coboundaries."""

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

TUPLE_CAP = 10 ** 6
DENSE_MAX = 4096


class TooLarge(ValueError):
    pass


@dataclass
class CocycleSpec:
    """F is stored as an array of shape (|Gamma|,) * (k+1), letters being 0..|Gamma|-1."""
    alphabet: tuple
    nu: np.ndarray
    k: int
    F: np.ndarray

    def __post_init__(self):
        self.nu = np.asarray(self.nu, dtype=float)
        self.F = np.asarray(self.F, dtype=float)
        g = len(self.alphabet)
        if not 1 <= g <= 16:
            raise ValueError("alphabet size must be in 1..16")
        if self.k < 0:
            raise ValueError("k must be >= 0")
        if self.nu.shape != (g,) or (self.nu <= 0).any():
            raise ValueError("nu must be strictly positive on the alphabet")
        if abs(self.nu.sum() - 1.0) > 1e-12:
            raise ValueError("nu must sum to 1")
        if g ** (self.k + 1) > TUPLE_CAP:
            raise TooLarge("too many tuples")
        self.F = self.F.reshape((g,) * (self.k + 1))
        if abs(self.mean()) > 1e-14 * max(1.0, np.abs(self.F).max()):
            raise ValueError("F must be centered under the product measure")

    @property
    def size(self):
        return len(self.alphabet)

    def mean(self):
        m = self.F
        for _ in range(self.k + 1):
            m = np.tensordot(m, self.nu, axes=([0], [0]))
        return float(m)

    @classmethod
    def from_config(cls, cfg):
        alpha = tuple(cfg["alphabet"])
        k = int(cfg["k"])
        return cls(alpha, np.asarray(cfg["nu"], dtype=float), k,
                   np.asarray(cfg["F"], dtype=float).reshape((len(alpha),) * (k + 1)))

    @classmethod
    def centered(cls, F, nu, k, alphabet=None):
        """Subtract the product-measure mean (for building examples, not for inputs)."""
        F = np.asarray(F, dtype=float)
        nu = np.asarray(nu, dtype=float)
        m = F
        for _ in range(k + 1):
            m = np.tensordot(m, nu, axes=([0], [0]))
        alphabet = alphabet or tuple(range(len(nu)))
        return cls(tuple(alphabet), nu, k, F - float(m))


def annealed_matrix(spec, beta, as_sparse=None):
    """A[(a_1..a_{k+1}), (a_2..a_{k+1}, c)] = exp(beta F(a_2..a_{k+1}, c)) nu(c).

    States are tuples in Gamma^{k+1} flattened in C order.
    """
    g, k = spec.size, spec.k
    n = g ** (k + 1)
    rows = np.repeat(np.arange(n), g)
    shift = (np.arange(n) % (g ** k)) * g
    cols = (shift[:, None] + np.arange(g)[None, :]).ravel()
    Ff = spec.F.ravel()
    vals = np.exp(beta * Ff[cols]) * spec.nu[cols % g]
    if as_sparse is None:
        as_sparse = n > DENSE_MAX
    if as_sparse:
        return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
    A = np.zeros((n, n))
    A[rows, cols] = vals
    return A


def perron_eigenvalue(A, tol=1e-15, max_iter=100_000):
    if sparse.issparse(A):
        v = np.ones(A.shape[0]) / A.shape[0]
        lam = 0.0
        for _ in range(max_iter):
            w = A @ v
            new = w.sum()
            w /= new
            if abs(new - lam) <= tol * new and np.abs(w - v).max() <= 1e-13:
                return float(new)
            v, lam = w, new
        return float(lam)
    w = np.linalg.eigvals(A)
    return float(w[np.argmax(w.real)].real)


def cocycle_free_energy(spec, beta):
    """L(beta) = log of the Perron-Frobenius eigenvalue of A_beta."""
    if beta == 0:
        return 0.0
    return math.log(perron_eigenvalue(annealed_matrix(spec, beta)))


def log_partition(spec, beta, N):
    """log Tr[A_beta^N], computed on the matrix scaled by its PF eigenvalue."""
    if N < 1:
        raise ValueError("N must be >= 1")
    A = annealed_matrix(spec, beta, as_sparse=False)
    if A.shape[0] > DENSE_MAX:
        raise TooLarge("partition needs a dense matrix")
    e = perron_eigenvalue(A)
    P = np.linalg.matrix_power(A / e, N)
    return N * math.log(e) + math.log(np.trace(P))


def partition(spec, beta, N):
    return math.exp(log_partition(spec, beta, N))


def cyclic_sum(spec, eta):
    """sum_i F(eta_i, eta_{i+1}, ..., eta_{i+k}) with indices mod len(eta)."""
    eta = list(eta)
    N = len(eta)
    tot = 0.0
    for i in range(N):
        idx = tuple(eta[(i + j) % N] for j in range(spec.k + 1))
        tot += spec.F[idx]
    return tot


@dataclass
class CoboundaryResult:
    is_coboundary: bool
    G: np.ndarray = None  # shape (|Gamma|,) * k
    witness: tuple = None
    witness_sum: float = 0.0
    max_residual: float = 0.0


def is_coboundary(spec, tol=1e-10):
    """Decide whether F = G(tail) - G(head), constructing G from a fixed tuple.

    gamma_1..gamma_k is the all-zero tuple (smallest letters). On failure at a
    tuple alpha, one of the cyclic words (alpha, gamma) or (alpha_1..alpha_k, gamma)
    has a nonzero cyclic sum and is returned as the witness.
    """
    g, k = spec.size, spec.k
    F = spec.F
    if k == 0:
        bad = np.nonzero(np.abs(F) > tol)[0]
        if bad.size:
            a = int(bad[0])
            return CoboundaryResult(False, None, (a,), float(F[a]), float(np.abs(F).max()))
        return CoboundaryResult(True, np.zeros(()), None, 0.0, float(np.abs(F).max()))
    gam = (0,) * k
    G = np.zeros((g,) * k)
    for z in itertools.product(range(g), repeat=k):
        G[z] = -sum(F[z[i:] + gam[:i + 1]] for i in range(k))
    head = G[(Ellipsis,) + (None,)]  # G(a_1..a_k) broadcast over a_{k+1}
    tail = G[(None,) + (Ellipsis,)]  # G(a_2..a_{k+1})
    R = F - (tail - head)
    res = float(np.abs(R).max())
    if res <= tol:
        return CoboundaryResult(True, G, None, 0.0, res)
    alpha = tuple(int(i) for i in np.unravel_index(int(np.argmax(np.abs(R))), R.shape))
    for word in (alpha + gam, alpha[:k] + gam):
        s = cyclic_sum(spec, word)
        if abs(s) > tol:
            return CoboundaryResult(False, None, word, float(s), res)
    raise RuntimeError("no witness found; the construction should not allow this")
