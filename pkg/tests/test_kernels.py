import numpy as np
import pytest

from copolymer import _fallback, _kernels
from copolymer.deloc import find_stretch
from copolymer.env import Environment

needs_core = pytest.mark.skipif(_kernels._core is None, reason="compiled core not built")


def test_backend_selection():
    assert _kernels.BACKEND in ("cython", "numpy")
    assert _kernels.backend("numpy") is _fallback
    with pytest.raises(ValueError):
        _kernels.backend("fortran")


@needs_core
def test_stretch_scanners_agree():
    env = Environment(seed=5)
    for q, M in [(-0.5, 8), (-0.3, 20), (-0.8, 4)]:
        a = find_stretch(env, q, M, kern=_kernels.backend("cython"))
        b = find_stretch(env, q, M, kern=_kernels.backend("numpy"))
        assert (a.tau, a.R) == (b.tau, b.R)


@needs_core
def test_scanner_bits_equal_pairsums():
    from copolymer.env import _philox_words
    env = Environment(seed=17)
    words = _philox_words(env.key, 0, 64)
    w = env.generate(1, 64 * 256)
    ps = np.ascontiguousarray(w[0::2] + w[1::2])
    for kern in (_kernels.backend("cython"), _fallback):
        s1 = kern.StretchScanner(-0.4, 12, 26, 0, 0.0)
        s1.feed_bits(words)
        s2 = kern.StretchScanner(-0.4, 12, 26, 0, 0.0)
        s2.feed(ps)
        assert (s1.done, s1.tau, s1.R) == (s2.done, s2.tau, s2.R)
