import math

import numpy as np
import pytest
from scipy.integrate import trapezoid
from scipy.optimize import brentq

from copolymer.env import ChargeLaw
from copolymer.stats import (Decision, TaskFailed, concentration_penalty,
                             delocalization_side_test, localization_test, mc_map, median_ci,
                             p_value, sample_logZ, small_N_criterion)

BIN = ChargeLaw.binary()
TABLE = [(7.179, 225_000, 600_000, 0.3, 1.5e-6),
         (9.011, 330_000, 1_000_000, 0.6, 9.5e-3),
         (7.643, 970_000, 320_000, 1.0, 1.6e-5)]


@pytest.mark.parametrize("u,n,S,lam,want", TABLE)
def test_table_p_values(u, n, S, lam, want):
    assert p_value(u, n, S, lam) == pytest.approx(want, rel=0.1)


def test_p_value_monotone():
    us = np.linspace(0.1, 5, 30)
    ps = [p_value(u, 100, 1000, 0.5) for u in us]
    assert (np.diff(ps) < 0).all()
    ns = np.arange(10, 500, 20)
    assert (np.diff([p_value(1.0, n, 1000, 0.5) for n in ns]) < 0).all()


def test_penalties():
    assert concentration_penalty(BIN) == 16
    assert concentration_penalty(ChargeLaw.finite([-1, 0, 1], [0.25, 0.5, 0.25], scale=False)) == 64
    with pytest.raises(ValueError):
        concentration_penalty(ChargeLaw.gaussian())


def test_nonpositive_mean_is_inconclusive():
    rep = localization_test(BIN, 0.5, 0.8, 200, 10, master_seed=1)
    assert rep.u_hat <= 0
    assert rep.p_value == 1.0 and rep.decision == Decision.INCONCLUSIVE.value
    side = delocalization_side_test(BIN, 0.5, 0.8, 200, 10, master_seed=1)
    assert side.decision == Decision.DELOCALIZED.value
    assert side.p_value == pytest.approx(p_value(-side.u_hat, 10, 200, 0.5))


def test_odd_size_rejected():
    with pytest.raises(ValueError):
        localization_test(BIN, 1, 0, 201, 5)


def test_thread_count_invariance():
    a = sample_logZ(BIN, 1.0, 0.2, 400, 12, 77, workers=1)
    b = sample_logZ(BIN, 1.0, 0.2, 400, 12, 77, workers=4)
    assert np.array_equal(a, b)


def test_mc_map_reduction_and_failure():
    vals = [math.sin(i) * 1e-3 for i in range(1000)]
    s1 = mc_map(lambda i: vals[i], 1000, workers=1, reducer=lambda a, b: a + b, initial=0.0)
    s4 = mc_map(lambda i: vals[i], 1000, workers=4, reducer=lambda a, b: a + b, initial=0.0)
    assert s1 == s4
    assert mc_map(lambda i: i, 0, reducer=max, initial=-1) == -1

    def boom(i):
        if i == 7:
            raise ValueError("bad")
        return i

    with pytest.raises(TaskFailed) as exc:
        mc_map(boom, 20, workers=3)
    assert exc.value.index == 7


def test_median_ci():
    assert median_ci(np.arange(1, 501)) == [229.0, 271.0]
    assert median_ci(np.full(40, 2.5)) == [2.5, 2.5]
    with pytest.raises(ValueError):
        median_ci(np.arange(10))


def _enumerated_small_N(lam, h):
    tot = 0.0
    for a in (-1, 1):
        for b in (-1, 1):
            tot += 0.25 * math.log(0.5 + 0.5 * math.exp(-2 * lam * (a + b + 2 * h)))
    return tot


def test_small_N_criterion():
    assert small_N_criterion(BIN, 0.0, 0.3) == 0.0
    want = 0.25 * math.log((0.5 + 0.5 * math.exp(-4)) * (0.5 + 0.5 * math.exp(4)))
    assert small_N_criterion(BIN, 1.0, 0.0) == pytest.approx(want, abs=1e-14)
    for lam, h in [(0.3, 0.1), (2.0, 0.6), (10, 0.93)]:
        assert small_N_criterion(BIN, lam, h) == pytest.approx(_enumerated_small_N(lam, h), abs=1e-14)


def test_small_N_large_lam():
    lam = 10.0
    c = 0.25 * math.log(2 * math.e ** 4 - 1)
    # positive at 1 - c/lam; the exact root sits higher, near 1 - log(2)/lam
    assert small_N_criterion(BIN, lam, 1 - c / lam) > 0
    root = brentq(lambda h: small_N_criterion(BIN, lam, h), 0.5, 1.0, xtol=1e-13)
    assert root == pytest.approx(brentq(lambda h: _enumerated_small_N(lam, h), 0.5, 1.0), abs=1e-10)
    assert 1 - c / lam < root < 1


def test_small_N_gaussian_quadrature():
    # E log(1/2 + exp(-2 lam (sqrt2 g + 2h))/2) by dense trapezoid as a cross-check
    lam, h = 0.7, 0.2
    g = np.linspace(-12, 12, 200_001)
    f = np.logaddexp(0, -2 * lam * (math.sqrt(2) * g + 2 * h)) - math.log(2)
    dens = np.exp(-g * g / 2) / math.sqrt(2 * math.pi)
    ref = trapezoid(f * dens, g)
    assert small_N_criterion(ChargeLaw.gaussian(), lam, h) == pytest.approx(ref, abs=1e-9)


def test_report_serializes():
    rep = localization_test(BIN, 1.0, 0.0, 200, 5, master_seed=3)
    d = rep.to_dict()
    assert d["S"] == 200 and d["master_seed"] == 3
