"""Thresholding success rate around the TH upper bound, with the fitted 50% crossing."""

import argparse
import sys

import numpy as np

from sparserd.bounds import th_upper_bound
from sparserd.harness.config import ExperimentConfig
from sparserd.harness.experiments import phase_transition_sweep


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--omega", type=float, default=0.05)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--snr-db", type=float, default=10.0)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--points", type=int, default=9)
    p.add_argument("--k-override", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args(argv)
    cfg = ExperimentConfig(n=args.n, omega=args.omega, alpha=args.alpha, snr_db=args.snr_db, trials=args.trials,
                           k_override=args.k_override)
    bound = th_upper_bound(cfg.source, cfg.alpha)
    grid = bound * np.geomspace(0.5, 2.0, args.points)
    sweep = phase_transition_sweep(cfg, grid, workers=args.workers)
    print("rho_over_bound,success_rate,mean_distortion")
    for r, s in zip(sweep.rhos, sweep.summaries):
        print(f"{r / bound:.4f},{s.success_rate:.4f},{s.mean_distortion:.4f}")
    print(f"# TH bound {bound:.6g}; crossing {sweep.crossing:.6g} ({sweep.crossing / bound:.4f} x bound)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
