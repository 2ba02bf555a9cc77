"""Bounded-source NS and TH bounds against SNR at a single distortion level."""

import argparse
import sys

import numpy as np

from sparserd.bounds import BoundedSourceParams, bounded_curves


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--omega", type=float, default=1e-4)
    p.add_argument("--eta", type=float, default=0.2)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--snr-db", default="-5:45:60", help="lo:hi:n")
    p.add_argument("--plot", default=None, help="optional PNG path (needs matplotlib)")
    args = p.parse_args(argv)
    lo, hi, num = args.snr_db.split(":")
    snrs = np.linspace(float(lo), float(hi), int(num))
    rows = []
    for s in snrs:
        ns, th = bounded_curves(args.omega, BoundedSourceParams.from_snr(args.omega, args.eta, s), [args.alpha])
        rows.append((s, ns.rho[0], th.rho[0]))
    print("snr_db,ns_bounded,th_bounded")
    for s, a, b in rows:
        print(f"{s:.6g},{a:.10g},{b:.10g}")
    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        arr = np.array(rows)
        fig, ax = plt.subplots()
        ax.semilogy(arr[:, 0], arr[:, 1], label="NS upper bound")
        ax.semilogy(arr[:, 0], arr[:, 2], label="TH upper bound")
        ax.set_xlabel("SNR (dB)")
        ax.set_ylabel("rate")
        ax.legend()
        fig.savefig(args.plot, dpi=120)
    return 0


if __name__ == "__main__":
    sys.exit(main())
