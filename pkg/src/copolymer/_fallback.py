"""Pure numpy versions of the compiled kernels, same signatures and results."""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

FLUSH = 1e-300
LOG2 = np.log(2.0)


def chain(z, off, lo, hi, m0, log_alpha, restricted, A, B, N0, log0_out):
    size = z.shape[0]
    scale = 0.0
    for s, la in enumerate(np.asarray(log_alpha)):
        m = m0 + s + 1
        if la > 0:
            ap, an = np.exp(-la), 1.0
            scale += la
        else:
            ap, an = 1.0, np.exp(la)
        nlo, nhi = max(lo - 1, 1), min(hi + 1, size - 2)
        old = z[nlo - 1:nhi + 2].copy()
        val = 0.25 * old[2:] + 0.5 * old[1:-1] + 0.25 * old[:-2]
        idx = np.arange(nlo, nhi + 1)
        pos = idx > off
        neg = idx < off
        val[pos] *= ap
        val[neg] *= an
        if nlo <= off <= nhi:
            k = off - nlo
            c = old[k + 1]
            val[k] = ap * 0.25 * (old[k + 2] + c) + an * 0.25 * (c + old[k])
        z[nlo:nhi + 1] = val
        if restricted and 2 * m >= N0:
            wlo = off + int(np.ceil(-A * np.sqrt(m)))
            whi = off + int(np.floor(B * np.sqrt(m)))
            if wlo > nlo:
                z[nlo:wlo] = 0.0
                nlo = wlo
            if whi < nhi:
                z[whi + 1:nhi + 1] = 0.0
                nhi = whi
        seg = z[nlo:nhi + 1]
        mx = seg.max()
        seg /= mx
        seg[seg < FLUSH] = 0.0
        scale += np.log(mx)
        nz = np.nonzero(seg)[0]
        lo, hi = nlo + nz[0], nlo + nz[-1]
        log0_out[s] = np.log(z[off]) + scale if z[off] > 0 else -np.inf
    return int(lo), int(hi), scale


def log_phi(t):
    t = np.asarray(t, dtype=float)
    return np.logaddexp(0.0, -2.0 * t) - LOG2


def excursion_logz0(cum, lam, h, logk):
    cum = np.asarray(cum)
    logk = np.asarray(logk)
    npair = (cum.shape[0] - 1) // 2
    out = np.empty(npair + 1)
    out[0] = 0.0
    ce = cum[0:2 * npair + 1:2]
    for m in range(1, npair + 1):
        j = np.arange(m)
        x = 2 * (m - j)
        t = lam * (ce[m] - ce[j]) + lam * h * x
        v = out[:m] + logk[x] + log_phi(t)
        mx = v.max()
        out[m] = mx + np.log(np.exp(v - mx).sum())
    return out


class StretchScanner:
    """Same contract as the compiled scanner; block-vectorized candidate search."""

    def __init__(self, q, k, kcap, mode=0, thr=0.0):
        if k % 2 or kcap % 2 or k < 2 or kcap < 2 * k:
            raise ValueError("k, kcap must be even with kcap >= 2k")
        self.q, self.thr, self.mode = float(q), float(thr), int(mode)
        self.kcur, self.kcap = int(k), int(kcap)
        self.n = 0
        self.hist = np.zeros(1)  # Q at pair indices n - len + 1 .. n
        self.tau = self.ell = self.R = -1
        self.done = 0

    @property
    def qn(self):
        return float(self.hist[-1])

    def _qat(self, j):
        return self.hist[j - (self.n - self.hist.size + 1)]

    def feed(self, pairsums):
        if self.done:
            return 0
        s = np.asarray(pairsums, dtype=float)
        m = s.size
        w = self.kcap // 2
        n0 = self.n
        q_new = self.hist[-1] + np.cumsum(s - 2.0 * self.q)
        full = np.concatenate([self.hist, q_new])
        first = n0 - self.hist.size + 1  # pair index of full[0]
        # candidate test with the smallest right lag (kcur at block start)
        lag = self.kcur // 2
        padded = np.concatenate([np.full(w, -np.inf), full])
        win = sliding_window_view(padded, w - lag + 1).max(axis=1)
        nidx = np.arange(n0 + 1, n0 + m + 1)
        cand = win[nidx - first] >= q_new
        used = m
        for i in np.nonzero(cand)[0]:
            n = n0 + 1 + i
            qn = q_new[i]
            jlo, jhi = max(n - w, 0), n - self.kcur // 2
            seg = full[jlo - first:jhi - first + 1]
            hit = np.nonzero(seg >= qn)[0]
            if hit.size == 0:
                continue
            j = jlo + hit[0]
            kmax = 2 * (n - j)
            if self.mode == 0:
                self._finish(full, first, n, qn, self.kcur)
                used = i + 1
                break
            kneed = int(np.ceil(np.log(2.0 * n) / self.thr))
            kneed += kneed % 2
            kneed = max(kneed, self.kcur)
            if kneed <= kmax:
                self._finish(full, first, n, qn, kneed)
                used = i + 1
                break
            self.kcur = kmax + 2
            if 2 * self.kcur > self.kcap:
                self.done = 2
                used = i + 1
                break
        self.n = n0 + used
        keep = full[:self.n - first + 1]
        self.hist = keep[-(w + 2):].copy()
        return used

    def _finish(self, full, first, n, qn, ell):
        self.tau, self.ell = 2 * n, ell
        j = n - ell // 2
        while full[j - first] < qn:
            j -= 1
        self.R = 2 * (n - j)
        self.done = 1

    def feed_bits(self, words):
        words = np.ascontiguousarray(words, dtype=np.uint64)
        bits = np.unpackbits(words.view(np.uint8), bitorder="little").astype(np.float64)
        s = 2.0 * (bits[0::2] + bits[1::2]) - 2.0
        return 2 * self.feed(s)
