"""OPT at extreme gamma against NS and TH on small random instances."""

import argparse
import sys

from sparserd.harness.verify import verify_theorem8


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--seed", type=int, default=4)
    args = p.parse_args(argv)
    rep = verify_theorem8(instances=args.instances, seed=args.seed)
    for line in rep.lines():
        print(line)
    return 0 if rep.passed else 2


if __name__ == "__main__":
    sys.exit(main())
