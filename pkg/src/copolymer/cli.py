"""Command-line driver.

Every subcommand reads a JSON config (``--config``), writes its outputs into
``<out>/<subcommand>-<hash>/`` with a ``manifest.json`` and prints a JSON
summary on stdout. Progress goes to stderr. Invalid configs exit with code 2
and a JSON error on stderr.

CSV headers (schema 1):

    walk              n,K,n32K
    transfer          sample,M,logZ0,logZfree
    test-loc          sample,logZ0
    profile-distance  seed,N,value
    critical-curve    seed,lam,N,h_hat
    lower-bound       seed,A,eps,q,ell,T,R,logZ0_at_T,log_bound,holds
    periodic          action-specific, see _periodic
    cocycle           beta,L
    llt-check         n,sup_error
"""

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import platform
import sys
import time

import numpy as np

from . import __version__, _kernels
from .env import ChargeLaw, Environment, h_lower, h_upper
from .stats import mc_map

SCHEMA_VERSION = 1
log = logging.getLogger("copolymer")


class ConfigError(ValueError):
    pass


def _need(cfg, key):
    if key not in cfg:
        raise ConfigError(f"missing config key {key!r}")
    return cfg[key]


def _window(cfg):
    from .transfer import FULL, Window
    w = cfg.get("window", "full")
    if w == "full":
        return FULL
    if w == "restricted":
        return Window.restricted()
    if isinstance(w, dict):
        return Window.restricted(w.get("A", 3.0), w.get("B", 8.0), w.get("N0", 1000))
    raise ConfigError(f"unknown window {w!r}")


def _law(cfg):
    try:
        return ChargeLaw.from_config(cfg.get("law", "binary"))
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc


def _csv(rows, header):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for r in rows:
        wr.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _summary_ci(values):
    from .stats import median_ci
    v = np.asarray(values, dtype=float)
    out = {"n": int(v.size), "median": float(np.median(v)) if v.size else None}
    if v.size >= 30:
        out["ci95"] = median_ci(v)
    return out


# --- subcommands: each returns (files, summary) --------------------------------

def _walk(cfg, seed, threads):
    from .walk import WalkSpec, return_law
    kind = cfg.get("kind", "simple")
    spec = WalkSpec.simple() if kind == "simple" else WalkSpec.triple(cfg.get("p", 0.3))
    n_max = int(cfg.get("n_max", 1000))
    law = return_law(spec, n_max)
    n = np.arange(1, n_max + 1)
    rows = zip(n, law.k, n ** 1.5 * law.k)
    return ({"walk.csv": _csv(rows, ["n", "K", "n32K"])},
            {"c_k_hat": law.c_k_hat, "n_max": n_max})


def _schedule(N, points):
    m = np.unique(np.round(np.geomspace(1, N // 2, points)).astype(int))
    return [int(2 * x) for x in m]


def _transfer(cfg, seed, threads):
    from .transfer import Params, Profile, log_alpha_pairs
    law = _law(cfg)
    params = Params(float(_need(cfg, "lam")), float(_need(cfg, "h")))
    N = int(_need(cfg, "N"))
    if N % 2 or N < 2:
        raise ConfigError("N must be even and positive")
    window = _window(cfg)
    sched = _schedule(N, int(cfg.get("points", 40)))
    base = Environment(law=law, seed=seed)

    def one(i):
        env = base.for_sample(i)
        prof = Profile(window.half_width(N // 2))
        done, out = 0, []
        for M in sched:
            w = env.generate(done + 1, M)
            prof.advance(log_alpha_pairs(w, params), window)
            done = M
            out.append((i, M, prof.log_at(0), prof.log_total()))
        return out

    rows = [r for chunk in mc_map(one, int(cfg.get("samples", 1)), threads) for r in chunk]
    last = [r for r in rows if r[1] == sched[-1]]
    return ({"transfer.csv": _csv(rows, ["sample", "M", "logZ0", "logZfree"])},
            {"N": N, "mean_logZ0": float(np.mean([r[2] for r in last])),
             "mean_logZfree": float(np.mean([r[3] for r in last]))})


def _test_loc(cfg, seed, threads):
    from .stats import delocalization_side_test, localization_test, p_value
    law = _law(cfg)
    lam = float(_need(cfg, "lam"))
    if "u_hat" in cfg:
        # formula check without sampling
        from .stats import concentration_penalty
        u, n, S = float(cfg["u_hat"]), int(_need(cfg, "n")), int(_need(cfg, "S"))
        pen = concentration_penalty(law)
        p = p_value(u, n, S, lam, pen) if u > 0 else 1.0
        rep = {"lam": lam, "h": cfg.get("h"), "S": S, "n": n, "u_hat": u, "p_value": p,
               "decision": "RejectH0_Localized" if u > 0 else "Inconclusive",
               "master_seed": seed, "penalty": pen}
        return {"report.json": json.dumps(rep, indent=2) + "\n"}, rep
    h = float(_need(cfg, "h"))
    S, n = int(_need(cfg, "S")), int(_need(cfg, "n"))
    fn = delocalization_side_test if cfg.get("side") == "deloc" else localization_test
    rep, sample = fn(law, lam, h, S, n, seed, _window(cfg), threads, return_sample=True)
    d = rep.to_dict()
    return ({"report.json": json.dumps(d, indent=2) + "\n",
             "samples.csv": _csv(enumerate(sample), ["sample", "logZ0"])}, d)


def _profile_distance(cfg, seed, threads):
    from .deloc import meander_distance
    from .transfer import Params
    law = _law(cfg)
    params = Params(float(_need(cfg, "lam")), float(_need(cfg, "h")))
    sizes = [int(x) for x in _need(cfg, "twoN")]
    n = int(cfg.get("n_seeds", 50))
    window = _window(cfg)
    base = Environment(law=law, seed=seed)

    def one(i):
        return [(i, N, meander_distance(base.for_sample(i), params, N, window)) for N in sizes]

    rows = [r for chunk in mc_map(one, n, threads) for r in chunk]
    summ = {str(N): _summary_ci([r[2] for r in rows if r[1] == N]) for N in sizes}
    return {"profile_distance.csv": _csv(rows, ["seed", "N", "value"]),
            "summary.json": json.dumps(summ, indent=2) + "\n"}, summ


def _critical_curve(cfg, seed, threads):
    from .deloc import SaturatedEstimate, critical_h_estimate
    law = _law(cfg)
    lams = [float(x) for x in _need(cfg, "lams")]
    N = int(_need(cfg, "twoN"))
    n = int(cfg.get("n_seeds", 10))
    window = _window(cfg)
    base = Environment(law=law, seed=seed)

    def one(i):
        out = []
        for lam in lams:
            try:
                hh = critical_h_estimate(base.for_sample(i), lam, N, window=window)
            except SaturatedEstimate:
                hh = float("nan")
            out.append((i, lam, N, hh))
        return out

    rows = [r for chunk in mc_map(one, n, threads) for r in chunk]
    summ = {}
    for lam in lams:
        v = [r[3] for r in rows if r[1] == lam and not math.isnan(r[3])]
        s = _summary_ci(v)
        s.update(h_lower=float(h_lower(law, lam)), h_upper=float(h_upper(law, lam)))
        summ[repr(lam)] = s
    return {"critical_curve.csv": _csv(rows, ["seed", "lam", "N", "h_hat"]),
            "summary.json": json.dumps(summ, indent=2) + "\n"}, summ


def _lower_bound(cfg, seed, threads):
    from .deloc import certificate
    from .transfer import Params
    law = _law(cfg)
    params = Params(float(_need(cfg, "lam")), float(_need(cfg, "h")))
    A, eps = int(_need(cfg, "A")), float(_need(cfg, "eps"))
    q = cfg.get("q")
    n = int(cfg.get("n_seeds", 10))
    cap = int(float(cfg.get("step_cap", 1e9)))
    base = Environment(law=law, seed=seed)
    try:
        certs = mc_map(lambda i: certificate(base.for_sample(i), params, A, eps, q,
                                             step_cap=cap), n, threads)
    except Exception as exc:
        cause = exc.__cause__ or exc
        if isinstance(cause, ValueError):
            raise ConfigError(str(cause)) from exc
        raise
    rows = [(i, c.A, c.eps, c.q, c.ell, c.T, c.R, c.logZ0_at_T, c.log_bound, int(c.holds))
            for i, c in enumerate(certs)]
    summ = {"holds": sum(c.holds for c in certs), "n": n,
            "censored": sum(bool(c.extra.get("censored")) for c in certs),
            "log_bound": certs[0].log_bound if certs else None}
    header = ["seed", "A", "eps", "q", "ell", "T", "R", "logZ0_at_T", "log_bound", "holds"]
    return {"lower_bound.csv": _csv(rows, header)}, summ


def _periodic(cfg, seed, threads):
    from . import periodic as P
    action = _need(cfg, "action")
    if action == "curve":
        fam = _need(cfg, "family")
        omega = np.asarray(_need(fam, "omega"), dtype=float)
        lams = [float(x) for x in _need(cfg, "lams")]

        def family(lam, h):
            return P.PeriodicModel.paired_copolymer(omega, lam, h)

        rows = [(lam, P.critical_curve_periodic(family, lam)) for lam in lams]
        summ = {"points": len(rows)}
        if len(rows) >= 2:
            x = np.log([r[0] for r in rows])
            y = np.log([r[1] for r in rows])
            summ["loglog_slope"] = float(np.polyfit(x, y, 1)[0])
        return {"curve.csv": _csv(rows, ["lam", "h_c"])}, summ
    try:
        model = P.PeriodicModel.from_config(_need(cfg, "model"))
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if action == "delta":
        d = P.delta(model)
        summ = {"delta": d, "regime": P.classify(d).value}
        return {"delta.json": json.dumps(summ, indent=2) + "\n"}, summ
    if action == "free-energy":
        fe = P.free_energy(model)
        summ = {"F": fe.F, "mu": fe.mu, "mu_fd": fe.mu_fd}
        return {"free_energy.json": json.dumps(summ, indent=2) + "\n"}, summ
    if action == "constants":
        rep = P.analyze(model)
        rows = [(eta, c) for eta, c in enumerate(rep.constants)]
        summ = {"delta": rep.delta, "regime": rep.regime.value, "F": rep.F, "mu": rep.mu,
                "pathological": rep.pathological}
        return {"constants.csv": _csv(rows, ["eta", "C"]),
                "constants.json": json.dumps(summ, indent=2) + "\n"}, summ
    if action == "kernels":
        kern = P.build_kernel(model, int(cfg.get("X_cut", 10_000)))
        eta = int(cfg.get("eta", 0))
        lk = P.limit_kernels(model, kern, eta, cfg.get("kind", "c"))
        T = model.T
        rows = [(a, b, x, lk.Gamma[x, a, b]) for a in range(T) for b in range(T)
                for x in range(lk.Gamma.shape[0]) if lk.Gamma[x, a, b] > 0]
        summ = {"row_sums": lk.row_sums.tolist(), "escape": lk.escape.tolist(),
                "tail": lk.tail.tolist(), "signs": P.sign_parameters(model, eta)}
        return {"kernel.csv": _csv(rows, ["alpha", "beta", "x", "Gamma"]),
                "kernels.json": json.dumps(summ, indent=2) + "\n"}, summ
    raise ConfigError(f"unknown periodic action {action!r}")


def _cocycle(cfg, seed, threads):
    from .cocycle import CocycleSpec, TooLarge, cocycle_free_energy, is_coboundary
    try:
        spec = CocycleSpec.from_config(cfg)
    except TooLarge:
        raise
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    betas = [float(b) for b in cfg.get("betas", np.linspace(-2, 2, 21).tolist())]
    rows = [(b, cocycle_free_energy(spec, b)) for b in betas]
    res = is_coboundary(spec)
    verdict = {"is_coboundary": res.is_coboundary, "max_residual": res.max_residual}
    if res.is_coboundary:
        verdict["G"] = np.asarray(res.G).ravel().tolist()
    else:
        verdict["witness"] = [spec.alphabet[i] for i in res.witness]
        verdict["witness_sum"] = res.witness_sum
    return {"free_energy.csv": _csv(rows, ["beta", "L"]),
            "verdict.json": json.dumps(verdict, indent=2) + "\n"}, verdict


def _llt_check(cfg, seed, threads):
    from .fluct import ballot_check, conditioned_llt_error
    ns = [int(x) for x in cfg.get("ns", [256, 1024, 4096])]
    rows = [(n, conditioned_llt_error(n)) for n in ns]
    summ = {"sup_error": {str(n): e for n, e in rows}}
    if "ballot_n_max" in cfg:
        summ["ballot_error"] = ballot_check(int(cfg["ballot_n_max"]))
    return {"llt.csv": _csv(rows, ["n", "sup_error"])}, summ


COMMANDS = {
    "walk": _walk,
    "transfer": _transfer,
    "test-loc": _test_loc,
    "profile-distance": _profile_distance,
    "critical-curve": _critical_curve,
    "lower-bound": _lower_bound,
    "periodic": _periodic,
    "cocycle": _cocycle,
    "llt-check": _llt_check,
}


def _parser():
    p = argparse.ArgumentParser(prog="copolymer", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="JSON config file, or - for stdin")
        s.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
        s.add_argument("--out", default="runs", help="parent directory for run outputs")
        s.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: COPOLYMER_WORKERS or CPU count)")
        s.add_argument("--backend", choices=("auto", "cython", "numpy"), default="auto")
    return p


def _error(kind, message, code):
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def run(command, cfg, seed=None, out="runs", threads=None):
    """Execute one subcommand; returns (run directory, summary)."""
    if not isinstance(cfg, dict) or not cfg:
        raise ConfigError("empty config")
    seed = int(cfg.get("master_seed", 0) if seed is None else seed)
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must be a u64")
    canon = json.dumps({"command": command, "config": cfg, "seed": seed}, sort_keys=True)
    tag = hashlib.sha256(canon.encode()).hexdigest()[:12]
    t0 = time.time()
    log.info("%s: starting (run %s)", command, tag)
    files, summary = COMMANDS[command](cfg, seed, threads)
    wall = time.time() - t0
    rundir = os.path.join(out, f"{command}-{tag}")
    os.makedirs(rundir, exist_ok=True)
    for name, text in files.items():
        with open(os.path.join(rundir, name), "w") as fh:
            fh.write(text)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": cfg,
        "master_seed": seed,
        "threads": threads,
        "backend": _kernels.BACKEND,
        "versions": {"copolymer": __version__, "numpy": np.__version__,
                     "python": platform.python_version()},
        "wall_time_s": wall,
        "outputs": sorted(files),
    }
    with open(os.path.join(rundir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info("%s: done in %.2fs -> %s", command, wall, rundir)
    return rundir, summary


def main(argv=None):
    logging.basicConfig(level=logging.INFO, stream=sys.stderr, format="%(message)s")
    args = _parser().parse_args(argv)
    try:
        text = sys.stdin.read() if args.config == "-" else open(args.config).read()
    except OSError as exc:
        return _error("config", str(exc), 2)
    if not text.strip():
        _parser().print_usage(sys.stderr)
        return _error("config", "empty config", 2)
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        return _error("config", f"invalid JSON: {exc}", 2)
    if args.backend != "auto":
        _kernels.use(args.backend)
    try:
        rundir, summary = run(args.command, cfg, args.seed, args.out, args.threads)
    except ConfigError as exc:
        if str(exc) == "empty config":
            _parser().print_usage(sys.stderr)
        return _error("config", str(exc), 2)
    except Exception as exc:  # machine-readable failure report
        return _error(type(exc).__name__, str(exc), 1)
    sys.stdout.write(json.dumps({"run_dir": rundir, "summary": summary},
                                default=float, sort_keys=True) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
