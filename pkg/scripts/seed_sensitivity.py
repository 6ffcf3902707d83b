"""Spread of q^2 Var / frem_l2 across master seeds.

The sweep checks are statistical, so a single seed can land outside a
tolerance. This shows how much the ratios move from seed to seed.
"""

import argparse

import numpy as np

from oasampling.anova import decompose, get_integrand
from oasampling.harness import replicate_estimates
from oasampling.sampler import Design


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, default=12)
    p.add_argument("--q", type=int, nargs="+", default=[23, 47])
    p.add_argument("--replicates", type=int, default=5000)
    args = p.parse_args()

    f = get_integrand("product", 3)
    frem = decompose(f, 128).frem_l2
    for q in args.q:
        for design in (Design.OAS, Design.OALH, Design.OALH_TANG):
            ratios = [
                q * q * np.var(replicate_estimates(f, design, q, 3, args.replicates, s), ddof=1) / frem
                for s in range(args.seeds)
            ]
            print(f"q={q:<3} {design.value:<10} mean={np.mean(ratios):.4f} sd={np.std(ratios, ddof=1):.4f}")


if __name__ == "__main__":
    main()
