import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from copolymer.env import (ChargeLaw, Environment, cramer, cramer_binary_closed, h_lower,
                           h_m, h_sat, h_upper, mgf)
from copolymer.transfer import Params, pinned_logZ

BIN = ChargeLaw.binary()
GAUSS = ChargeLaw.gaussian()
THREE = ChargeLaw.finite([-1, 0, 2], [0.3, 0.5, 0.2])


def test_mgf_values():
    assert mgf(BIN, 1.0) == pytest.approx(math.cosh(1.0), rel=1e-15)
    assert mgf(GAUSS, 2.0) == pytest.approx(math.e ** 2, rel=1e-14)
    for law in (BIN, GAUSS, THREE):
        assert mgf(law, 0.0) == pytest.approx(1.0, abs=1e-15)


def test_finite_law_is_centered_and_scaled():
    v, p = np.array(THREE.values), np.array(THREE.probs)
    assert np.dot(p, v) == pytest.approx(0, abs=1e-15)
    assert np.dot(p, v * v) == pytest.approx(1, abs=1e-14)
    raw = ChargeLaw.finite([-1, 3], [0.75, 0.25], scale=False)
    assert raw.values == (-1.0, 3.0)
    with pytest.raises(ValueError):
        ChargeLaw.finite([1, 2], [0.5, 0.6])


def test_bound_curves_against_table():
    assert h_lower(BIN, 0.6) == pytest.approx(0.363, abs=5e-4)
    assert h_upper(BIN, 0.6) == pytest.approx(0.495, abs=5e-4)
    assert h_lower(BIN, 0.3) == pytest.approx(0.195, abs=5e-4)
    # at lam = 1 the printed values sit 5.2e-4 and 5.0e-4 below the formula
    assert h_lower(BIN, 1.0) == pytest.approx(0.530, abs=1e-3)
    assert h_upper(BIN, 1.0) == pytest.approx(0.662, abs=1e-3)
    # the tabulated 0.286 at lam = 0.3 is off by 2.4e-3 from log cosh(0.6)/0.6
    assert h_upper(BIN, 0.3) == pytest.approx(math.log(math.cosh(0.6)) / 0.6, rel=1e-14)


def test_h_m_small_lam_slope():
    assert h_m(BIN, 1.0, 1e-6) == pytest.approx(1e-6, rel=0.01)
    with pytest.raises(ValueError):
        h_m(BIN, 1.0, 0.0)


def test_h_m_increasing_in_m():
    ms = np.linspace(0.05, 5, 100)
    for lam in (0.1, 0.6, 1.0, 4.0):
        vals = np.array([h_m(BIN, m, lam) for m in ms])
        assert (np.diff(vals) > 0).all()


def test_cramer_examples():
    assert cramer(BIN, 0.0) == 0.0
    q = 0.5
    assert cramer(BIN, q) == pytest.approx(0.75 * math.log(1.5) + 0.25 * math.log(0.5), rel=1e-13)
    assert cramer(GAUSS, 1.0) == 0.5
    assert cramer(BIN, 1.0) == pytest.approx(math.log(2))
    with pytest.raises(ValueError):
        cramer(BIN, 1.5)


def _numeric_legendre(law, q):
    from copolymer.env import log_mgf
    r = minimize_scalar(lambda a: -(a * q - float(log_mgf(law, a))), bounds=(-50, 50),
                        method="bounded", options={"xatol": 1e-12})
    return -r.fun


def test_cramer_matches_numeric_legendre():
    for q in np.linspace(-0.99, 0.99, 45):
        assert cramer(BIN, q) == pytest.approx(_numeric_legendre(BIN, q), abs=1e-8)
        assert cramer(BIN, q) == pytest.approx(float(cramer_binary_closed(q)), abs=1e-12)
    lo, hi = THREE.support()
    for q in np.linspace(lo + 0.05, hi - 0.05, 20):
        assert cramer(THREE, q) == pytest.approx(_numeric_legendre(THREE, q), abs=1e-7)


@given(st.floats(-0.98, 0.98), st.floats(-0.98, 0.98))
@settings(max_examples=60, deadline=None)
def test_cramer_convex_nonnegative(a, b):
    m = 0.5 * (a + b)
    assert cramer(BIN, m) <= 0.5 * (cramer(BIN, a) + cramer(BIN, b)) + 1e-12
    assert cramer(BIN, a) >= 0


def test_backward_generation():
    assert list(Environment.from_array([1, -1, 1]).backward(3).generate(1, 3)) == [1, -1, 1]
    assert list(Environment.from_array([1, 1, -1]).backward(3).generate(1, 3)) == [-1, 1, 1]
    env = Environment(seed=5)
    fw = env.generate(1, 1000)
    bw = env.backward(1000).generate(1, 1000)
    assert np.array_equal(bw, fw[::-1])
    with pytest.raises(ValueError):
        Environment.from_array([1, 1]).generate(1, 3)


def test_generation_is_addressable_and_reproducible():
    for law in (BIN, GAUSS, THREE):
        env = Environment(law=law, seed=11, sample=3)
        full = env.generate(1, 5000)
        assert np.array_equal(full, Environment(law=law, seed=11, sample=3).generate(1, 5000))
        for a, b in [(1, 1), (255, 260), (1023, 1030), (4001, 5000)]:
            assert np.array_equal(env.generate(a, b), full[a - 1:b])
        assert not np.array_equal(full, env.for_sample(4).generate(1, 5000))


def test_binary_sample_mean():
    w = Environment(seed=2024).generate(1, 10_000)
    assert set(np.unique(w)) == {-1.0, 1.0}
    assert abs(w.mean()) < 3 / math.sqrt(1e4)


def test_h_sat_examples():
    assert h_sat([-1, -1, 1, 1], 4) == 1
    assert h_sat(np.ones(10), 10) == -1
    w = Environment(law=GAUSS, seed=8).generate(1, 2000)
    hs = h_sat(w, 2000)
    env = Environment.from_array(w, GAUSS)
    for lam in (0.5, 2.0):
        assert pinned_logZ(env, Params(lam, hs + 0.01), 2000) < 0
