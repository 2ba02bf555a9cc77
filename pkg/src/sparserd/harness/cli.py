"""Command-line interface: ``bounds``, ``simulate``, ``sweep`` and ``verify``."""

import argparse
import math
import sys

import numpy as np

from ..bounds import (
    BoundedSourceParams,
    bound_curve,
    bounded_curves,
    convexify,
    default_alpha_grid,
    write_curves_csv,
)
from ..sources import FAMILIES, SourceSpec, make_distribution, parse_params
from .config import load_config, parse_grid
from .experiments import phase_transition_sweep, run_trials, write_sweep_csv, write_trials_csv
from .verify import verify_lemma_suite, verify_theorem8

__all__ = ["main", "build_parser"]


def _alpha_grid(text, omega):
    if text is None:
        return default_alpha_grid(omega)
    lo, hi, num = text.split(":")
    lo, hi, num = float(lo), float(hi), int(num)
    return np.geomspace(lo, hi, num) if lo > 0 else np.linspace(lo, hi, num)


def _open_out(path):
    return sys.stdout if path in (None, "-") else open(path, "w", newline="")


def cmd_bounds(args):
    alphas = _alpha_grid(args.alpha_grid, args.omega)
    if args.family == "bounded":
        gamma = args.gamma if args.gamma is not None else 10.0 ** (args.snr_db / 10.0) / args.omega
        curves = list(bounded_curves(args.omega, BoundedSourceParams(args.eta, gamma), alphas))
    else:
        dist = make_distribution(args.family, parse_params(args.params))
        spec = SourceSpec(args.omega, dist, 10.0 ** (args.snr_db / 10.0))
        labels = args.labels.split(",") if args.labels else ["ns_ub", "th_ub", "th_loose"]
        if not args.labels and args.family == "gaussian" and dist.mean == 0:
            labels.append("th_gaussian")
        curves = [bound_curve(label, spec, alphas) for label in labels]
    if args.convexify:
        curves.append(convexify([c for c in curves if c.label not in ("th_loose",)], args.omega))
    out = _open_out(args.out)
    try:
        write_curves_csv(out, curves)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_simulate(args):
    cfg = load_config(args.config)
    summary = run_trials(cfg, workers=args.workers)
    out = _open_out(args.out)
    try:
        write_trials_csv(out, summary)
    finally:
        if out is not sys.stdout:
            out.close()
    lo, hi = summary.p_error_ci
    print(f"P_e = {summary.p_error:.4f} (95% Wilson [{lo:.4f}, {hi:.4f}]), mean distortion {summary.mean_distortion:.4f}",
          file=sys.stderr)
    return 0


def cmd_sweep(args):
    cfg = load_config(args.config)
    rhos = parse_grid(args.rho)
    sweep = phase_transition_sweep(cfg, rhos, workers=args.workers)
    out = _open_out(args.out)
    try:
        write_sweep_csv(out, sweep)
    finally:
        if out is not sys.stdout:
            out.close()
    print(f"50% crossing {sweep.crossing:.6g}; TH bound {sweep.bound:.6g}", file=sys.stderr)
    return 0


def cmd_verify(args):
    ok = True
    if args.suite in ("lemmas", "all"):
        rep = verify_lemma_suite(seed=args.seed, quick=args.quick)
        for line in rep.lines():
            print(line)
        ok &= rep.passed
    if args.suite in ("theorem8", "all"):
        rep = verify_theorem8(instances=50 if args.quick else 200, seed=args.seed + 4)
        for line in rep.lines():
            print(line)
        print(f"[{'PASS' if rep.passed else 'FAIL'}] theorem8_limits")
        ok &= rep.passed
    return 0 if ok else 2


def build_parser():
    p = argparse.ArgumentParser(prog="sparserd", description="Sparsity-pattern recovery bounds and experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bounds", help="evaluate rate-distortion bounds and write CSV")
    b.add_argument("--family", required=True, choices=sorted(FAMILIES) + ["bounded"])
    b.add_argument("--params", default="", help="family parameters, e.g. 'mean=0,variance=1'")
    b.add_argument("--omega", type=float, required=True)
    b.add_argument("--snr-db", type=float, required=True)
    b.add_argument("--eta", type=float, default=0.2)
    b.add_argument("--gamma", type=float, default=None, help="bounded-family power (default: SNR/omega)")
    b.add_argument("--alpha-grid", default=None, help="lo:hi:n (log-spaced)")
    b.add_argument("--labels", default=None, help="comma list from ns_ub,th_ub,th_loose,th_gaussian")
    b.add_argument("--convexify", action="store_true")
    b.add_argument("--out", default="-")
    b.set_defaults(func=cmd_bounds)

    s = sub.add_parser("simulate", help="run Monte Carlo trials from a config file")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default="-")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="phase-transition sweep over a rate grid")
    w.add_argument("--config", required=True)
    w.add_argument("--rho", required=True, help="lo:hi:n (evenly spaced)")
    w.add_argument("--out", default="-")
    w.add_argument("--workers", type=int, default=1)
    w.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify", help="run lemma and OPT-limit verifiers")
    v.add_argument("--suite", choices=("lemmas", "theorem8", "all"), default="all")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--quick", action="store_true", help="fewer trials")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
