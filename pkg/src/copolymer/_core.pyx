# cython: language_level=3
"""Compiled kernels: transfer chain, last-return oracle, stretch scanner."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, log1p, sqrt, ceil, floor, INFINITY
from libc.stdint cimport uint64_t

cnp.import_array()

cdef double FLUSH = 1e-300
cdef double LOG2 = 0.6931471805599453


def chain(double[::1] z, Py_ssize_t off, Py_ssize_t lo, Py_ssize_t hi,
          Py_ssize_t m0, const double[::1] log_alpha,
          bint restricted, double A, double B, Py_ssize_t N0,
          double[::1] log0_out):
    """Advance the profile len(log_alpha) pair-steps in place.

    z holds linear weights at index y + off, zero outside [lo, hi] (indices).
    Returns (lo, hi, added log scale). log0_out[s] receives log z(0) plus
    the scale accumulated inside this call after step s.
    """
    cdef Py_ssize_t nsteps = log_alpha.shape[0]
    cdef Py_ssize_t s, i, nlo, nhi, wlo, whi, m
    cdef double la, ap, an, prev, cur, nxt, val, mx, inv, scale = 0.0
    cdef Py_ssize_t size = z.shape[0]
    with nogil:
        for s in range(nsteps):
            m = m0 + s + 1
            la = log_alpha[s]
            if la > 0:
                ap = exp(-la)
                an = 1.0
                scale += la
            else:
                ap = 1.0
                an = exp(la)
            nlo = lo - 1
            nhi = hi + 1
            if nlo < 1:
                nlo = 1
            if nhi > size - 2:
                nhi = size - 2
            prev = z[nlo - 1]
            for i in range(nlo, nhi + 1):
                cur = z[i]
                nxt = z[i + 1]
                if i > off:
                    val = ap * (0.25 * nxt + 0.5 * cur + 0.25 * prev)
                elif i == off:
                    val = ap * 0.25 * (nxt + cur) + an * 0.25 * (cur + prev)
                else:
                    val = an * (0.25 * nxt + 0.5 * cur + 0.25 * prev)
                prev = cur
                z[i] = val
            if restricted and 2 * m >= N0:
                wlo = off + <Py_ssize_t>ceil(-A * sqrt(<double>m))
                whi = off + <Py_ssize_t>floor(B * sqrt(<double>m))
                for i in range(nlo, wlo):
                    z[i] = 0.0
                for i in range(whi + 1, nhi + 1):
                    z[i] = 0.0
                if wlo > nlo:
                    nlo = wlo
                if whi < nhi:
                    nhi = whi
            mx = 0.0
            for i in range(nlo, nhi + 1):
                if z[i] > mx:
                    mx = z[i]
            inv = 1.0 / mx
            for i in range(nlo, nhi + 1):
                val = z[i] * inv
                if val < FLUSH:
                    val = 0.0
                z[i] = val
            scale += log(mx)
            while z[nlo] == 0.0:
                nlo += 1
            while z[nhi] == 0.0:
                nhi -= 1
            lo = nlo
            hi = nhi
            if z[off] > 0.0:
                log0_out[s] = log(z[off]) + scale
            else:
                log0_out[s] = -INFINITY
    return lo, hi, scale


cdef inline double log_phi(double t) noexcept nogil:
    if t >= 0:
        return log1p(exp(-2.0 * t)) - LOG2
    return -2.0 * t + log1p(exp(2.0 * t)) - LOG2


def excursion_logz0(const double[::1] cum, double lam, double h,
                    const double[::1] logk):
    """log Z(0) at every even length by last-return decomposition.

    cum[j] is the charge sum over sites 1..j; logk[x] = log K(x).
    Returns out[m] = log Z_{2m}(0), m = 0..len(cum)//2.
    """
    cdef Py_ssize_t npair = (cum.shape[0] - 1) // 2
    out_arr = np.empty(npair + 1)
    cdef double[::1] out = out_arr
    tmp_arr = np.empty(npair + 1)
    cdef double[::1] tmp = tmp_arr
    cdef Py_ssize_t m, j, x
    cdef double mx, acc, t
    out[0] = 0.0
    with nogil:
        for m in range(1, npair + 1):
            mx = -INFINITY
            for j in range(m):
                x = 2 * (m - j)
                t = lam * (cum[2 * m] - cum[2 * j]) + lam * h * x
                tmp[j] = out[j] + logk[x] + log_phi(t)
                if tmp[j] > mx:
                    mx = tmp[j]
            acc = 0.0
            for j in range(m):
                acc += exp(tmp[j] - mx)
            out[m] = mx + log(acc)
    return out_arr


cdef class StretchScanner:
    """Online search for q-atypical stretches over pair sums.

    Q_j = P_j - q j is tracked at even sites j. A stretch (j, n] has mean
    <= q iff Q_j >= Q_n. Two running maxima are kept: over j <= n - kcap/2
    (sites that left the ring) and over j <= n - kcur/2. A stretch of length
    >= kcur exists iff the second is >= Q_n; its length is then resolved
    inside the ring (first occurrences always have length < 2 kcur <= kcap).

    mode 0: stop at tau_{kcur}, the first n with a stretch of length >= kcur.
    mode 1: search ell, the first k >= kcur with log tau_k <= k thr.
    """
    cdef public double q, thr, qn
    cdef public long long n, tau, ell, R, kcur, kcap
    cdef public int mode, done
    cdef object _ring
    cdef double *ring
    cdef double oldmax, curmax
    cdef long long mask

    def __init__(self, double q, long long k, long long kcap, int mode=0, double thr=0.0):
        if k % 2 or kcap % 2 or k < 2 or kcap < 2 * k:
            raise ValueError("k, kcap must be even with kcap >= 2k")
        cdef long long size = 1
        while size < kcap // 2 + 4:
            size *= 2
        self.mask = size - 1
        self._ring = np.zeros(size)
        self.ring = <double *>cnp.PyArray_DATA(self._ring)
        self.q = q
        self.thr = thr
        self.mode = mode
        self.kcur = k
        self.kcap = kcap
        self.n = 0
        self.qn = 0.0
        self.oldmax = -INFINITY
        self.curmax = -INFINITY
        self.tau = -1
        self.ell = -1
        self.R = -1
        self.done = 0

    cdef int step(self, double s) noexcept nogil:
        cdef long long n, jlo, jhi, j, kmax, kneed
        cdef long long mask = self.mask
        cdef double qn, v
        self.n += 1
        n = self.n
        qn = self.qn + s - 2.0 * self.q
        self.qn = qn
        self.ring[n & mask] = qn
        jlo = n - self.kcap // 2
        jhi = n - self.kcur // 2
        if jlo >= 0:
            v = self.ring[jlo & mask]
            if v > self.oldmax:
                self.oldmax = v
        if jhi >= 0:
            v = self.ring[jhi & mask]
            if v > self.curmax:
                self.curmax = v
        if self.curmax < qn:
            return 0
        j = jlo if jlo > 0 else 0
        while j <= jhi and self.ring[j & mask] < qn:
            j += 1
        if j > jhi:
            return 0
        kmax = 2 * (n - j)
        if self.mode == 0:
            self.tau = 2 * n
            self.ell = self.kcur
            self._set_r(n)
            self.done = 1
            return 1
        kneed = <long long>ceil(log(<double>(2 * n)) / self.thr)
        if kneed % 2:
            kneed += 1
        if kneed < self.kcur:
            kneed = self.kcur
        if kneed <= kmax:
            self.tau = 2 * n
            self.ell = kneed
            self._set_r(n)
            self.done = 1
            return 1
        self.kcur = kmax + 2
        if 2 * self.kcur > self.kcap:
            self.done = 2
            return 2
        # the lag grew: recompute the running max for the next step
        self.curmax = self.oldmax
        j = n + 1 - self.kcap // 2
        if j < 0:
            j = 0
        while j < n + 1 - self.kcur // 2:
            v = self.ring[j & mask]
            if v > self.curmax:
                self.curmax = v
            j += 1
        return 0

    cdef void _set_r(self, long long n) noexcept nogil:
        cdef long long j = n - self.ell // 2
        while self.ring[j & self.mask] < self.qn:
            j -= 1
        self.R = 2 * (n - j)

    def feed(self, const double[::1] pairsums):
        """Consume pair sums; returns the number consumed before stopping."""
        cdef Py_ssize_t i, m = pairsums.shape[0], used = m
        cdef int r
        if self.done:
            return 0
        with nogil:
            for i in range(m):
                r = self.step(pairsums[i])
                if r:
                    used = i + 1
                    break
        return used

    def feed_bits(self, const uint64_t[::1] words):
        """Binary charges, one bit each (bit i of word w is site 64 w + i)."""
        cdef Py_ssize_t i, b, m = words.shape[0], used = 64 * m
        cdef uint64_t w
        cdef int r = 0
        cdef double s
        if self.done:
            return 0
        with nogil:
            for i in range(m):
                w = words[i]
                for b in range(32):
                    s = 2.0 * <double>((w & 1) + ((w >> 1) & 1)) - 2.0
                    w >>= 2
                    r = self.step(s)
                    if r:
                        used = 64 * i + 2 * (b + 1)
                        break
                if r:
                    break
        return used
