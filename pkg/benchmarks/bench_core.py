"""Compare the compiled kernels against the numpy fallback.

    python benchmarks/bench_core.py [--quick]

Prints one line per (kernel, backend) with the median wall time and checks
that both backends return the same numbers.
"""

import argparse
import statistics
import time

import numpy as np

from copolymer import _kernels
from copolymer.deloc import find_stretch
from copolymer.env import Environment
from copolymer.transfer import FULL, Params, Window, excursion_oracle_logZ0, pinned_logZ


def timeit(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return statistics.median(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args()
    scale = 1 if args.quick else 4
    env = Environment(seed=7)
    p = Params(0.6, 0.44)
    cases = [
        ("chain full", lambda k: pinned_logZ(env, p, 5000 * scale, FULL, kern=k)),
        ("chain restricted", lambda k: pinned_logZ(env, p, 50_000 * scale,
                                                   Window.restricted(), kern=k)),
        ("excursion oracle", lambda k: excursion_oracle_logZ0(env, p, 1000 * scale, kern=k)),
        ("stretch scan", lambda k: find_stretch(env, -0.6, 16, kern=k).tau),
    ]
    backends = ["numpy"]
    if _kernels._core is not None:
        backends.insert(0, "cython")
    print(f"{'kernel':<18} {'backend':<8} {'median s':>10} {'rel':>8}")
    for name, fn in cases:
        base = None
        vals = []
        for b in backends:
            k = _kernels.backend(b)
            t, v = timeit(lambda: fn(k), 3)
            vals.append(v)
            base = base or t
            print(f"{name:<18} {b:<8} {t:10.4f} {t / base if b == 'numpy' and len(backends) > 1 else 1.0:8.1f}")
        if len(vals) == 2 and not np.allclose(vals[0], vals[1], rtol=1e-10, atol=1e-10):
            print(f"  mismatch: {vals}")


if __name__ == "__main__":
    main()
