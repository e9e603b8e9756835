import math

import numpy as np
import pytest

from copolymer.deloc import (CertificateNotApplicable, SaturatedEstimate, certificate,
                             critical_h_estimate, critical_q, find_stretch, first_passage_TC,
                             fit_m, mean_with_tail_warning, meander_distance, smallest_A)
from copolymer.env import ChargeLaw, Environment, cramer, h_lower, h_m, h_sat, h_upper
from copolymer.transfer import Params, Window, pinned_logZ

BIN = ChargeLaw.binary()
GAUSS = ChargeLaw.gaussian()


def test_meander_distance_bounds():
    for seed in range(5):
        for h in (0.0, 0.5, 1.0):
            d = meander_distance(Environment(seed=seed), Params(0.6, h), 1000)
            assert 0 <= d <= 2


def test_meander_distance_free_walk_small():
    # lam = 0: the pinned-free endpoint law is binomial, far from the meander law
    d0 = meander_distance(Environment(seed=0), Params(0.0, 0.0), 4000)
    # deep delocalization: close to the meander law
    d1 = meander_distance(Environment(seed=0), Params(0.6, 1.5), 4000)
    assert d1 < 0.2 < d0


def test_critical_h_estimate_residual():
    env = Environment(seed=3)
    h = critical_h_estimate(env, 1.0, 2000, tol=1e-8)
    assert abs(pinned_logZ(env, Params(1.0, h), 2000)) <= 1e-8


def test_critical_h_below_saturation_gaussian():
    env = Environment(law=GAUSS, seed=4)
    hs = h_sat(env.generate(1, 2000), 2000)
    for lam in (0.5, 2.0, 8.0):
        assert critical_h_estimate(env, lam, 2000) < hs


def test_critical_h_saturated():
    env = Environment.from_array(np.ones(20))
    with pytest.raises(SaturatedEstimate):
        critical_h_estimate(env, 1.0, 20, threshold=10.0)


def test_fit_m_round_trips():
    for m in (2 / 3, 1.0, 0.841):
        assert fit_m(BIN, 4.0, float(h_m(BIN, m, 4.0))) == pytest.approx(m, abs=1e-9)
    with pytest.raises(ValueError):
        fit_m(BIN, 4.0, 5.0)


@pytest.mark.slow
def test_fitted_m_desk_scale():
    h = critical_h_estimate(Environment(seed=1), 4.0, 500_000, window=Window.restricted())
    assert 0.78 <= fit_m(BIN, 4.0, h) <= 0.86


@pytest.mark.slow
def test_critical_h_below_annealed_bound():
    for lam in (0.3, 0.6, 1.0):
        h = critical_h_estimate(Environment(seed=2), lam, 100_000, window=Window.restricted())
        assert h <= h_upper(BIN, lam) + 0.02


def test_find_stretch_examples():
    st = find_stretch(Environment.from_array(-np.ones(20)), -0.5, 4)
    assert (st.tau, st.R) == (4, 4)
    st = find_stretch(Environment.from_array([1, 1, -1, -1, -1, -1]), -0.9, 2)
    assert (st.tau, st.R) == (4, 2)
    st = find_stretch(Environment.from_array(np.ones(40)), -0.5, 4)
    assert not st.found
    with pytest.raises(ValueError):
        find_stretch(Environment(), -1.0, 4)
    with pytest.raises(ValueError):
        find_stretch(Environment(), -0.5, 3)


def _brute_stretch(w, q, M):
    c = np.concatenate([[0.0], np.cumsum(w)])
    for n in range(M, len(w) + 1, 2):
        for r in range(M, min(2 * M, n) + 1, 2):
            if c[n] - c[n - r] <= q * r + 1e-12:
                return n, r
    return -1, -1


def test_find_stretch_matches_scan():
    rng = np.random.default_rng(5)
    for _ in range(200):
        w = rng.choice([-1.0, 1.0], 400)
        M = int(rng.choice([2, 4, 6, 8]))
        q = float(rng.choice([-0.2, -0.5, -0.75]))
        st = find_stretch(Environment.from_array(w), q, M)
        tau, R = _brute_stretch(w, q, M)
        assert st.tau == tau
        if tau > 0:
            assert M <= st.R <= 2 * M and st.R % 2 == 0
            assert w[tau - st.R:tau].mean() <= q + 1e-12


def test_find_stretch_laplace_growth():
    sig = cramer(BIN, -0.5)
    for M in (20, 40, 80):
        taus = [find_stretch(Environment(seed=s), -0.5, M).tau for s in range(100)]
        assert abs(np.median(np.log(taus)) / M - sig) <= 0.5


def test_critical_q():
    assert critical_q(BIN, 0.75) == pytest.approx(-math.tanh(1.0), abs=1e-15)


def test_certificate_not_applicable():
    env = Environment(seed=0)
    with pytest.raises(CertificateNotApplicable):
        certificate(env, Params(1.0, float(h_lower(BIN, 1.0)) + 1e-3), 20, 0.1)
    with pytest.raises(CertificateNotApplicable):
        certificate(env, Params(1.0, 0.4), 20, 0.1, q=-0.3)


@pytest.mark.parametrize("h,A,eps", [(0.1, 20, 0.2), (0.3, 30, 0.06)])
def test_certificate_holds(h, A, eps):
    p = Params(1.0, h)
    q = -math.tanh(1.0)
    assert smallest_A(BIN, p, eps, q) <= A
    for seed in range(10):
        c = certificate(Environment(seed=seed), p, A, eps, q)
        assert c.log_bound > 0
        assert c.holds, (seed, c)
        assert c.ell >= A
        assert math.log(c.T) / c.ell <= c.sigma + eps + 1e-12
        assert c.R % 2 == 0 and c.ell <= c.R <= 2 * c.ell


def test_certificate_censored_reports_failure():
    c = certificate(Environment(seed=0), Params(1.0, 0.4), 70, 0.04, -math.tanh(1.0),
                    step_cap=1 << 16)
    assert not c.holds and c.extra.get("censored")


def test_first_passage_examples():
    env = Environment.from_array(-np.ones(10))
    assert first_passage_TC(env, Params(1.0, 0.0), 1.01, 10) == 2
    found = [first_passage_TC(Environment(seed=s), Params(1.0, 0.0), 1.5, 10_000)
             for s in range(100)]
    assert all(f is not None for f in found)
    h = float(h_upper(BIN, 0.1)) + 0.05
    miss = [first_passage_TC(Environment(seed=s), Params(0.1, h), 1.5, 10_000) is None
            for s in range(100)]
    assert sum(miss) >= 95
    with pytest.raises(ValueError):
        first_passage_TC(env, Params(1.0, 0.0), 1.0, 10)


def test_first_passage_is_first():
    env = Environment(seed=9)
    p = Params(1.0, 0.2)
    n = first_passage_TC(env, p, 2.0, 5000)
    assert n is not None
    assert pinned_logZ(env, p, n) >= math.log(2.0)
    assert all(pinned_logZ(env, p, m) < math.log(2.0) for m in range(2, n, 2))


def test_mean_with_tail_warning():
    m, heavy = mean_with_tail_warning([1.0] * 99 + [1000.0])
    assert heavy and m == pytest.approx(10.99)
    assert mean_with_tail_warning(np.ones(50)) == (1.0, False)
