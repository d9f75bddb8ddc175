"""Finite-difference check of the CE + Sobel loss gradient over many random inputs.

Prints the distribution of max relative errors per configuration.
"""

import argparse

import numpy as np

from cvsroi.sobel_loss import LossConfig, check_gradient, random_pair


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--size", type=int, nargs=3, default=[3, 8, 8], metavar=("C", "H", "W"))
    ap.add_argument("--h", type=float, default=1e-5)
    args = ap.parse_args()

    configs = {
        "sum, lambda=1": LossConfig(),
        "max, lambda=1": LossConfig(channel_reduce="max"),
        "sum, lambda=0": LossConfig(lam=0.0),
        "sum, beta=0.25": LossConfig(beta=0.25),
    }
    print(f"{'config':<16} {'median':>10} {'max':>10}  pass(<1e-5)")
    for name, cfg in configs.items():
        errs = []
        for seed in range(args.seeds):
            g, p = random_pair(np.random.default_rng(seed), *args.size)
            errs.append(check_gradient(g, p, cfg, args.h))
        errs = np.array(errs)
        print(f"{name:<16} {np.median(errs):>10.2e} {errs.max():>10.2e}  {int((errs < 1e-5).sum())}/{len(errs)}")


if __name__ == "__main__":
    main()
