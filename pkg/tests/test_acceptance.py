"""End-to-end acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line before asserting.
"""

import itertools
import time
from pathlib import Path

import numpy as np
import pytest

from oasampling.anova import (
    HaarIndex,
    decompose,
    get_integrand,
    haar_coefficient,
    nu_table,
    quadrature_tolerance,
    tabulate,
)
from oasampling.cli import main
from oasampling.gf_oa import construct_bose_oa, verify_strength
from oasampling.harness import ExperimentConfig, run_experiment
from oasampling.randomize import SeedSpec, expand_to_latin, randomize_symbols, tang_randomize
from oasampling.sampler import (
    Design,
    batch_points,
    check_bivariate_stratification,
    check_univariate_latin,
    coupled_digit_samples,
    coupling_holds,
    sample_oalh,
    sample_oalh_tang,
    sample_oas,
)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture
def record(capsys):
    def emit(number, title, ok, detail=""):
        with capsys.disabled():
            print(f"\n[criterion {number:>2}] {'PASS' if ok else 'FAIL'}  {title}  {detail}".rstrip())
        assert ok, f"criterion {number} failed: {detail}"

    return emit


def run_config(name):
    started = time.perf_counter()
    report = run_experiment(ExperimentConfig.from_file(CONFIGS / name))
    return report, time.perf_counter() - started


@pytest.fixture(scope="module")
def sweep():
    return run_config("variance_sweep_product_d3.cfg")


def test_c01_oa_exhaustive(record):
    started = time.perf_counter()
    bad = [
        (q, d)
        for q in (2, 3, 5, 7, 11, 13)
        for d in range(3, q + 2)
        if not verify_strength(construct_bose_oa(q, d), 2)
    ]
    elapsed = time.perf_counter() - started
    record(1, "OA correctness", not bad and elapsed < 5, f"failures={bad} time={elapsed:.2f}s")


def test_c02_stratification(record):
    started = time.perf_counter()
    q, d = 5, 4
    failures = 0
    for s in range(200):
        seed = SeedSpec(s)
        A_star = randomize_symbols(construct_bose_oa(q, d), seed)
        A_dd = expand_to_latin(A_star, seed)
        failures += not check_bivariate_stratification(sample_oas(A_star, seed), q)
        for S in (sample_oalh(A_dd, seed), sample_oalh_tang(tang_randomize(A_dd, seed), seed)):
            failures += not check_bivariate_stratification(S, q)
            failures += not check_univariate_latin(S, q * q)
    elapsed = time.perf_counter() - started
    record(2, "exact stratification", failures == 0 and elapsed < 10,
           f"failures={failures} time={elapsed:.2f}s")


def test_c03_coupling(record):
    violations = 0
    for q in (2, 3, 5, 7):
        base = construct_bose_oa(q, q + 1)
        for s in range(500):
            seed = SeedSpec(s)
            X, Y = coupled_digit_samples(randomize_symbols(base, seed), seed)
            violations += not coupling_holds(X, Y, q)
    record(3, "coupling bound", violations == 0, f"violations={violations}")


def test_c04_unbiased(record):
    report, elapsed = run_config("unbiased_product_d3.cfg")
    z = {r["design"]: round(r["z_bias"], 2) for r in report.results}
    ok = len(z) == 5 and all(abs(v) <= 3 for v in z.values()) and elapsed < 30
    record(4, "unbiasedness", ok, f"z={z} time={elapsed:.1f}s")


def test_c05_variance_limit(record, sweep):
    report, elapsed = sweep
    frem = decompose(get_integrand("product", 3), 128).frem_l2
    quad_ok = abs(frem - 1 / 1728) < 1e-6
    ratios = {}
    ok = quad_ok and elapsed < 300
    for design in (Design.OAS, Design.OALH, Design.OALH_TANG):
        r = [report.cell(design, q)["ratio_to_frem"] for q in (11, 23, 47)]
        gaps = [abs(x - 1) for x in r]
        ok &= gaps[0] >= gaps[1] >= gaps[2] and 0.85 <= r[2] <= 1.15
        ratios[design.value] = [round(x, 3) for x in r]
    record(5, "q^2 Var / frem_l2 -> 1", ok, f"frem={frem:.6e} ratios={ratios} time={elapsed:.0f}s")


def test_c06_oas_vs_oalh(record, sweep):
    report, _ = sweep
    v = report.verdicts["oas_vs_oalh"]
    record(6, "OAS and OALH variances agree at q=47", v["pass"], f"ci={[round(c, 6) for c in v['ci']]}")


def test_c07_tang_ordering(record):
    report, _ = run_config("tang_additive_d3.cfg")
    v = report.verdicts["tang_ordering[q=11]"]
    record(7, "Tang ordering for additive f", v["pass"], f"upper={v['upper']:.3e}")


def test_c08_clt(record):
    report, elapsed = run_config("clt_product_d3.cfg")
    detail = {
        d: (round(c["ks"], 4), round(c["skewness"], 3), round(c["excess_kurtosis"], 3),
            round(c["ci_coverage"], 4))
        for d in ("OAS", "OALH", "OALH_TANG")
        for c in [report.cell(d, 23)]
    }
    ok = report.passed and len(report.verdicts) == 6 and elapsed < 120
    record(8, "standardized estimators near N(0,1)", ok, f"(ks,skew,kurt,cov)={detail} time={elapsed:.0f}s")


def test_c09_anova_identities(record):
    m = 128
    tau = quadrature_tolerance(m)
    worst = {}
    ok = True
    for name in ("product", "additive", "centered_product", "gaussian"):
        dec = decompose(get_integrand(name, 3), m)
        G = tabulate(dec.f, m)
        comps = [t.reshape([m if a == j else 1 for a in range(3)]) for j, t in enumerate(dec.main)]
        comps += [t.reshape([m if a in kl else 1 for a in range(3)]) for kl, t in dec.pair.items()]
        comps.append(dec.remainder_table)
        marg = max(
            [abs(t.mean()) for t in dec.main]
            + [np.abs(t.mean(axis=a)).max() for t in dec.pair.values() for a in (0, 1)]
        )
        ortho = max(abs(np.mean(a * b)) for a, b in itertools.combinations(comps, 2))
        pyth = abs(np.mean((G - dec.mu) ** 2) - sum(np.mean(np.broadcast_to(c, G.shape) ** 2) for c in comps))
        ok &= marg <= tau and ortho <= 10 * tau and pyth <= 10 * tau
        worst[name] = f"{max(marg, ortho, pyth):.1e}"
    additive = decompose(get_integrand("additive", 3), m).frem_l2
    ok &= additive <= 1e-10
    record(9, "ANOVA identities", ok, f"worst={worst} additive_frem={additive:.1e}")


def test_c10_haar_nu(record):
    q, m = 3, 54
    f = get_integrand("product", 3)
    haar = 0.0
    for col, (k, t) in itertools.product(range(3), ((0, 0), (1, 0), (1, 2))):
        other = {(col + 1) % 3: HaarIndex(0, 0, 1)}
        total = sum(haar_coefficient(f, q, {col: HaarIndex(k, t, c), **other}, m) for c in range(q))
        haar = max(haar, abs(total))
    zero_sum = agree = 0.0
    for u in itertools.product(range(3), repeat=3):
        closed = nu_table(f, q, u, m, "closed")
        agree = max(agree, np.abs(closed - nu_table(f, q, u, m, "recursive")).max())
        for axis, uj in enumerate(u):
            if uj:
                shape = list(closed.shape)
                shape[axis : axis + 1] = [shape[axis] // q, q]
                zero_sum = max(zero_sum, np.abs(closed.reshape(shape).sum(axis=axis + 1)).max())
    ok = haar <= 1e-10 and zero_sum <= 1e-9 and agree <= 1e-9
    record(10, "Haar and nu identities", ok,
           f"haar_sum={haar:.1e} nu_sum={zero_sum:.1e} closed_vs_recursive={agree:.1e}")


def test_c11_rerun_determinism(record, tmp_path):
    out = tmp_path / "report.json"
    first = main(["verify", "--config", str(CONFIGS / "unbiased_product_d3.cfg"), "--out", str(out)])
    again = tmp_path / "again.json"
    second = main(["rerun", str(tmp_path / "report.json.manifest.json"), "--out", str(again)])
    same = out.read_bytes() == again.read_bytes()
    record(11, "rerun reproduces report", first == second == 0 and same, f"identical={same}")
