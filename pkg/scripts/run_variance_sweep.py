"""Print q^2 Var / frem_l2 for the OA estimators across q.

    python scripts/run_variance_sweep.py --q 11 23 47 --replicates 5000
"""

import argparse
import time

from oasampling.harness import ExperimentConfig, run_variance_sweep


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--integrand", default="product")
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--q", type=int, nargs="+", default=[11, 23, 47])
    p.add_argument("--designs", nargs="+", default=["OAS", "OALH", "OALH_TANG", "SRS"])
    p.add_argument("--replicates", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    args = p.parse_args()

    cfg = ExperimentConfig(args.integrand, args.d, tuple(args.q), tuple(args.designs),
                           replicates=args.replicates, master_seed=args.seed, threads=args.threads)
    started = time.perf_counter()
    report = run_variance_sweep(cfg)
    print(f"{report.integrand} d={report.d} frem_l2={report.frem_l2:.6e} "
          f"Var(f)={report.f_variance:.6e} mu={report.mu_used:.6g} ({report.mu_source})")
    print(f"{'design':<10} {'q':>4} {'mean':>12} {'q^2 Var':>12} {'ratio':>8}")
    for r in report.results:
        ratio = "" if r["ratio_to_frem"] is None else f"{r['ratio_to_frem']:.4f}"
        print(f"{r['design']:<10} {r['q']:>4} {r['mean']:>12.8f} {r['q2_variance']:>12.5e} {ratio:>8}")
    for name, v in sorted(report.verdicts.items()):
        print(f"{'PASS' if v['pass'] else 'FAIL'}  {name}")
    print(f"elapsed {time.perf_counter() - started:.1f}s")


if __name__ == "__main__":
    main()
