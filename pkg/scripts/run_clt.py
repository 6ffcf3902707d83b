"""Normality summaries of the standardized OA estimators at one q."""

import argparse

from oasampling.harness import ExperimentConfig, run_clt_experiment


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--integrand", default="product")
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--q", type=int, default=23)
    p.add_argument("--replicates", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    cfg = ExperimentConfig(args.integrand, args.d, (args.q,), replicates=args.replicates,
                           master_seed=args.seed, experiment="clt")
    report = run_clt_experiment(cfg)
    print(f"{'design':<10} {'KS':>8} {'skew':>8} {'ex.kurt':>8} {'cover95':>8}")
    for r in report.results:
        print(f"{r['design']:<10} {r['ks']:>8.4f} {r['skewness']:>8.3f} "
              f"{r['excess_kurtosis']:>8.3f} {r['ci_coverage']:>8.4f}")
    print("all verdicts pass" if report.passed else "some verdicts FAIL")


if __name__ == "__main__":
    main()
