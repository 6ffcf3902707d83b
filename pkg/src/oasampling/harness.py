"""Replicated Monte Carlo experiments on the OA estimators.

A run fixes the base array per ``q`` and re-randomizes it for every
replicate. Each (design, q) cell draws from its own ``extra`` stream key, so
designs and sample sizes are mutually independent and replicates can be
generated in any order.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import special, stats

from .anova import decompose, get_integrand, mu_quadrature, tabulate
from .errors import ConfigError, DegenerateVariance, InsufficientReplicates, TooFewValues
from .estimators import batch_estimates, replicate_variance, standardized_values
from .gf_oa import construct_bose_oa, is_prime
from .randomize import Role, SeedSpec, stream_indices
from .sampler import Design, batch_points

__all__ = [
    "DEFAULT_TOLERANCES",
    "OA_DESIGNS",
    "ExperimentConfig",
    "ExperimentReport",
    "ks_statistic",
    "bootstrap_ci",
    "design_stream_extra",
    "replicate_estimates",
    "run_variance_sweep",
    "run_clt_experiment",
    "run_experiment",
    "normality_summary",
    "judge_normality",
]

MIN_REPLICATES = 100
OA_DESIGNS = (Design.OAS, Design.OALH, Design.OALH_TANG)

DEFAULT_TOLERANCES = {
    "ratio_tol": 0.15,
    "ks_tol": 0.05,
    "skew_tol": 0.2,
    "kurt_tol": 0.5,
    "coverage_lo": 0.93,
    "coverage_hi": 0.97,
    "unbiased_z": 3.0,
    "bootstrap_level": 0.95,
    "bootstrap_B": 2000,
    "tang_factor": 0.05,
}

SWEEP_CHECKS = ("converges", "monotone", "oas_vs_oalh", "tang_ordering", "tang_small", "oas_below_srs")
CLT_CHECKS = ("normal", "coverage")
ALL_CHECKS = SWEEP_CHECKS + CLT_CHECKS + ("unbiased",)

_DESIGN_CODES = {d: i for i, d in enumerate(Design)}
_BOOTSTRAP_EXTRA = 0x80000000


def design_stream_extra(design: Design, q: int) -> int:
    """``extra`` stream key for one (design, q) cell of an experiment."""
    return (_DESIGN_CODES[Design(design)] << 16) | q


@dataclass
class ExperimentConfig:
    integrand: str
    d: int
    q_list: tuple[int, ...]
    designs: tuple[Design, ...] = OA_DESIGNS
    replicates: int = 5000
    master_seed: int = 0
    experiment: str = "sweep"
    normality_alpha: float = 0.01
    m: int = 128
    checks: tuple[str, ...] = ("auto",)
    threads: int = 1
    chunk: int = 200
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def __post_init__(self):
        self.q_list = tuple(int(q) for q in self.q_list)
        self.designs = tuple(Design.parse(d) if isinstance(d, str) else Design(d) for d in self.designs)
        self.checks = tuple(self.checks)
        self.tolerances = {**DEFAULT_TOLERANCES, **self.tolerances}

    def validate(self) -> "ExperimentConfig":
        if self.replicates < MIN_REPLICATES:
            raise InsufficientReplicates(
                f"replicates={self.replicates} is below the minimum {MIN_REPLICATES}"
            )
        if not self.q_list:
            raise ConfigError("q_list is empty")
        if not self.designs:
            raise ConfigError("no designs selected")
        for q in self.q_list:
            if not is_prime(q):
                raise ConfigError(f"q={q} is not prime")
            if not 3 <= self.d <= q + 1:
                raise ConfigError(f"need 3 <= d <= q+1, got d={self.d}, q={q}")
        if self.experiment not in ("sweep", "clt", "both"):
            raise ConfigError(f"experiment must be sweep, clt or both, not {self.experiment!r}")
        unknown = set(self.checks) - set(ALL_CHECKS) - {"auto"}
        if unknown:
            raise ConfigError(f"unknown checks {sorted(unknown)}")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown tolerances {sorted(unknown)}")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        get_integrand(self.integrand, self.d)
        return self

    def to_dict(self) -> dict:
        out = asdict(self)
        out["q_list"] = list(self.q_list)
        out["designs"] = [d.value for d in self.designs]
        out["checks"] = list(self.checks)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        data["q_list"] = tuple(data["q_list"])
        data["designs"] = tuple(data.get("designs", [d.value for d in OA_DESIGNS]))
        if "checks" in data:
            data["checks"] = tuple(data["checks"])
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        """Parse flat ``key = value`` lines; ``#`` starts a comment."""
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            raw[key] = value
        return cls.from_dict(_coerce(raw))

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_text(Path(path).read_text())


def _split(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _coerce(raw: dict) -> dict:
    out: dict = {"tolerances": {}}
    try:
        for key, value in raw.items():
            if key in ("q_list", "q"):
                out["q_list"] = [int(v) for v in _split(value)]
            elif key == "designs":
                out["designs"] = _split(value)
            elif key == "checks":
                out["checks"] = _split(value)
            elif key in ("seed", "master_seed"):
                out["master_seed"] = int(value)
            elif key in ("d", "replicates", "m", "threads", "chunk"):
                out[key] = int(value)
            elif key == "normality_alpha":
                out[key] = float(value)
            elif key in ("integrand", "experiment"):
                out[key] = value
            elif key in DEFAULT_TOLERANCES:
                out["tolerances"][key] = int(value) if key == "bootstrap_B" else float(value)
            else:
                raise ConfigError(f"unknown config key {key!r}")
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    for key in ("integrand", "d", "q_list"):
        if key not in out:
            raise ConfigError(f"missing required key {key!r}")
    return out


@dataclass
class ExperimentReport:
    config: dict
    integrand: str
    d: int
    mu_used: float
    mu_source: str
    frem_l2: float | None
    f_variance: float | None
    results: list[dict]
    verdicts: dict[str, dict]
    seeds: dict[str, str]
    replicate_values: dict[str, list[float]] = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return all(v["pass"] for v in self.verdicts.values())

    def cell(self, design, q: int) -> dict:
        design = Design(design)
        for r in self.results:
            if r["design"] == design.value and r["q"] == q:
                return r
        raise KeyError((design, q))

    def values(self, design, q: int) -> np.ndarray:
        return np.asarray(self.replicate_values[_cell_key(Design(design), q)])

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("replicate_values")
        out["passed"] = self.passed
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def write_replicates_csv(self, path) -> None:
        lines = ["design,q,replicate,value"]
        for key in sorted(self.replicate_values):
            design, q = key.split("@")
            for i, v in enumerate(self.replicate_values[key]):
                lines.append(f"{design},{q},{i},{v!r}")
        Path(path).write_text("\n".join(lines) + "\n")


def _cell_key(design: Design, q: int) -> str:
    return f"{design.value}@{q}"


def ks_statistic(values) -> float:
    """Kolmogorov-Smirnov distance between the sample and N(0, 1)."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    n = v.size
    if n < 1:
        raise TooFewValues("ks_statistic needs at least one value")
    cdf = special.ndtr(v)
    i = np.arange(1, n + 1)
    return float(np.max(np.maximum(np.abs(i / n - cdf), np.abs((i - 1) / n - cdf))))


_STATISTICS = {
    "mean": lambda x: x.mean(axis=-1),
    "variance": lambda x: x.var(axis=-1, ddof=1),
    "mean_diff": lambda x, y: x.mean(axis=-1) - y.mean(axis=-1),
    "variance_diff": lambda x, y: x.var(axis=-1, ddof=1) - y.var(axis=-1, ddof=1),
}


def bootstrap_ci(values, statistic="mean", level: float = 0.95, B: int = 2000,
                 seed: SeedSpec | None = None, alternative: str = "two-sided",
                 chunk: int = 100) -> tuple[float, float]:
    """Percentile bootstrap interval.

    ``values`` is one array or a tuple of arrays resampled independently.
    ``statistic`` is a name from ``mean``, ``variance``, ``mean_diff``,
    ``variance_diff`` or a callable taking one ``(b, n_k)`` array per
    sample and returning ``b`` statistics. ``alternative`` selects a
    two-sided interval or a one-sided bound (``"less"`` gives ``(-inf, hi)``,
    ``"greater"`` gives ``(lo, inf)``).
    """
    samples = values if isinstance(values, tuple) else (values,)
    samples = tuple(np.asarray(s, dtype=np.float64) for s in samples)
    if B < 1000:
        raise TooFewValues(f"bootstrap needs B >= 1000, got {B}")
    if any(s.size < 2 for s in samples):
        raise TooFewValues("bootstrap needs at least two values per sample")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    stat = _STATISTICS[statistic] if isinstance(statistic, str) else statistic
    seed = seed or SeedSpec(0)
    draws = np.empty(B)
    for start in range(0, B, chunk):
        b = np.arange(start, min(start + chunk, B))
        resampled = []
        for k, s in enumerate(samples):
            idx = stream_indices(seed.master_seed, Role.JITTER, s.size, s.size, b, k, 0, seed.extra)
            resampled.append(s[idx])
        draws[b] = stat(*resampled)
    if alternative == "two-sided":
        lo, hi = np.quantile(draws, [(1 - level) / 2, (1 + level) / 2])
    elif alternative == "less":
        lo, hi = -np.inf, np.quantile(draws, level)
    elif alternative == "greater":
        lo, hi = np.quantile(draws, 1 - level), np.inf
    else:
        raise ValueError(f"unknown alternative {alternative!r}")
    return float(lo), float(hi)


def replicate_estimates(f, design, q: int, d: int, replicates: int, master_seed: int,
                        threads: int = 1, chunk: int = 200) -> np.ndarray:
    """Estimates from replicates ``0 .. replicates - 1`` of one design."""
    design = Design(design)
    base = construct_bose_oa(q, d)
    extra = design_stream_extra(design, q)
    starts = list(range(0, replicates, chunk))

    def work(start):
        reps = np.arange(start, min(start + chunk, replicates))
        return batch_estimates(f, batch_points(design, base, master_seed, reps, extra))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, starts))
    else:
        parts = [work(s) for s in starts]
    return np.concatenate(parts)


def normality_summary(values, mu: float) -> dict:
    """KS distance, moments and 95% normal-CI coverage of standardized values."""
    w, sd = standardized_values(values, mu)
    z = special.ndtri(0.975)
    return {
        "ks": ks_statistic(w),
        "skewness": float(stats.skew(w)),
        "excess_kurtosis": float(stats.kurtosis(w)),
        "ci_coverage": float(np.mean(np.abs(w) <= z)),
        "sigma_used": sd,
    }


def _reference(cfg: ExperimentConfig):
    f = get_integrand(cfg.integrand, cfg.d)
    if f.known_mu is not None:
        mu, source = f.known_mu, "known"
    else:
        mu, source = mu_quadrature(f, cfg.m), f"quadrature(m={cfg.m})"
    frem = fvar = None
    if 3 <= cfg.d <= 4:
        frem = decompose(f, cfg.m).frem_l2
        G = tabulate(f, cfg.m)
        fvar = float(np.mean((G - G.mean()) ** 2))
    return f, mu, source, frem, fvar


def _collect(cfg: ExperimentConfig):
    f, mu, source, frem, fvar = _reference(cfg)
    results, raw, seeds = [], {}, {}
    for q in sorted(cfg.q_list):
        for design in cfg.designs:
            values = replicate_estimates(
                f, design, q, cfg.d, cfg.replicates, cfg.master_seed, cfg.threads, cfg.chunk
            )
            key = _cell_key(design, q)
            raw[key] = values.tolist()
            seeds[key] = SeedSpec(cfg.master_seed, 0, extra=design_stream_extra(design, q)).canonical()
            var = replicate_variance(values)
            row = {
                "design": design.value,
                "q": q,
                "n": q * q,
                "replicates": cfg.replicates,
                "mean": float(values.mean()),
                "variance": var,
                "q2_variance": q * q * var,
                "se_mean": math.sqrt(var / cfg.replicates),
                "ratio_to_frem": (q * q * var / frem) if frem else None,
            }
            row["z_bias"] = (row["mean"] - mu) / row["se_mean"] if row["se_mean"] > 0 else 0.0
            if var > 0:
                row.update(normality_summary(values, mu))
            results.append(row)
    config = cfg.to_dict()
    # execution knobs do not change results
    config.pop("threads")
    config.pop("chunk")
    report = ExperimentReport(
        config=config,
        integrand=f.name,
        d=cfg.d,
        mu_used=mu,
        mu_source=source,
        frem_l2=frem,
        f_variance=fvar,
        results=results,
        verdicts={},
        seeds=seeds,
        replicate_values=raw,
    )
    return f, report


def _verdict(ok, tolerance, **detail):
    return {"pass": bool(ok), "tolerance": tolerance, **detail}


def _boot_seed(cfg, tag):
    seeds = {"oas_vs_oalh": 1, "tang_ordering": 2, "oas_below_srs": 3}
    return SeedSpec(cfg.master_seed, 0, extra=_BOOTSTRAP_EXTRA | seeds[tag])


def _selected(cfg, default):
    if "auto" in cfg.checks:
        return set(default)
    return set(cfg.checks) & set(default + ("unbiased",))


def _sweep_verdicts(cfg, f, report):
    tol = cfg.tolerances
    qs = sorted(cfg.q_list)
    qmax = qs[-1]
    present = set(cfg.designs)
    oa = [d for d in OA_DESIGNS if d in present]
    default = ["converges", "monotone"]
    if {Design.OAS, Design.OALH} <= present:
        default.append("oas_vs_oalh")
    if f.additive and {Design.OAS, Design.OALH_TANG} <= present:
        default.append("tang_ordering")
    if f.additive and Design.OALH_TANG in present:
        default.append("tang_small")
    if {Design.OAS, Design.SRS} <= present:
        default.append("oas_below_srs")
    chosen = _selected(cfg, tuple(default))
    out = {}
    level, B = tol["bootstrap_level"], int(tol["bootstrap_B"])

    if "converges" in chosen or "monotone" in chosen:
        if not report.frem_l2:
            raise ConfigError("convergence checks need a decomposable integrand with frem_l2 > 0")
        for design in oa:
            ratios = [report.cell(design, q)["ratio_to_frem"] for q in qs]
            if "converges" in chosen:
                r = ratios[-1]
                out[f"converges[{design.value}]"] = _verdict(
                    abs(r - 1) <= tol["ratio_tol"], "ratio_tol", q=qmax, ratio=r
                )
            if "monotone" in chosen:
                gaps = [abs(r - 1) for r in ratios]
                ok = all(b <= a for a, b in zip(gaps, gaps[1:]))
                out[f"monotone[{design.value}]"] = _verdict(
                    ok, "ratio_tol", q_list=qs, ratios=ratios
                )
    if "oas_vs_oalh" in chosen:
        x = report.values(Design.OAS, qmax) * qmax
        y = report.values(Design.OALH, qmax) * qmax
        lo, hi = bootstrap_ci((x, y), "variance_diff", level, B, _boot_seed(cfg, "oas_vs_oalh"))
        diff = float(np.var(x, ddof=1) - np.var(y, ddof=1))
        out["oas_vs_oalh"] = _verdict(
            lo <= 0 <= hi, "bootstrap_level", q=qmax, difference=diff, ci=[lo, hi]
        )
    if "tang_ordering" in chosen:
        for q in qs:
            x = report.values(Design.OALH_TANG, q)
            y = report.values(Design.OAS, q)
            _, hi = bootstrap_ci((x, y), "variance_diff", level, B, _boot_seed(cfg, "tang_ordering"),
                                 alternative="less")
            out[f"tang_ordering[q={q}]"] = _verdict(hi <= 0, "bootstrap_level", upper=hi)
    if "tang_small" in chosen:
        c = report.cell(Design.OALH_TANG, qmax)
        bench = tol["tang_factor"] * report.f_variance
        out["tang_small[OALH_TANG]"] = _verdict(
            c["q2_variance"] < bench, "tang_factor", q=qmax, q2_variance=c["q2_variance"],
            benchmark=bench,
        )
    if "oas_below_srs" in chosen:
        for q in qs:
            if q < 5:
                continue
            x = report.values(Design.OAS, q)
            y = report.values(Design.SRS, q)
            _, hi = bootstrap_ci((x, y), "variance_diff", level, B, _boot_seed(cfg, "oas_below_srs"),
                                 alternative="less")
            out[f"oas_below_srs[q={q}]"] = _verdict(hi < 0, "bootstrap_level", upper=hi)
    if "unbiased" in chosen:
        out.update(_unbiased_verdicts(cfg, report))
    return out


def _unbiased_verdicts(cfg, report):
    out = {}
    for row in report.results:
        out[f"unbiased[{row['design']},q={row['q']}]"] = _verdict(
            abs(row["z_bias"]) <= cfg.tolerances["unbiased_z"], "unbiased_z", z=row["z_bias"]
        )
    return out


def _normal_verdict(summary, tol):
    ok = (
        summary["ks"] <= tol["ks_tol"]
        and abs(summary["skewness"]) <= tol["skew_tol"]
        and abs(summary["excess_kurtosis"]) <= tol["kurt_tol"]
    )
    return _verdict(
        ok, "ks_tol,skew_tol,kurt_tol", ks=summary["ks"], skewness=summary["skewness"],
        excess_kurtosis=summary["excess_kurtosis"],
    )


def judge_normality(values, mu: float, tolerances=None) -> dict:
    """NORMAL verdict for arbitrary replicate values standardized about ``mu``."""
    tol = {**DEFAULT_TOLERANCES, **(tolerances or {})}
    return _normal_verdict(normality_summary(values, mu), tol)


def _clt_verdicts(cfg, f, report):
    tol = cfg.tolerances
    qmax = max(cfg.q_list)
    chosen = _selected(cfg, CLT_CHECKS)
    out = {}
    for design in cfg.designs:
        c = report.cell(design, qmax)
        if "ks" not in c:
            raise DegenerateVariance(f"{design.value} replicates at q={qmax} are constant")
        if "normal" in chosen:
            out[f"normal[{design.value}]"] = {**_normal_verdict(c, tol), "q": qmax}
        if "coverage" in chosen:
            cov = c["ci_coverage"]
            out[f"coverage[{design.value}]"] = _verdict(
                tol["coverage_lo"] <= cov <= tol["coverage_hi"], "coverage_lo,coverage_hi",
                q=qmax, coverage=cov,
            )
    if "unbiased" in chosen:
        out.update(_unbiased_verdicts(cfg, report))
    return out


def run_variance_sweep(cfg: ExperimentConfig) -> ExperimentReport:
    cfg = replace(cfg, experiment="sweep").validate()
    f, report = _collect(cfg)
    report.verdicts = _sweep_verdicts(cfg, f, report)
    return report


def run_clt_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    cfg = replace(cfg, experiment="clt").validate()
    f, report = _collect(cfg)
    report.verdicts = _clt_verdicts(cfg, f, report)
    return report


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Dispatch on ``cfg.experiment``; ``both`` shares one set of replicates."""
    cfg.validate()
    if cfg.experiment == "sweep":
        return run_variance_sweep(cfg)
    if cfg.experiment == "clt":
        return run_clt_experiment(cfg)
    f, report = _collect(cfg)
    report.verdicts = {**_sweep_verdicts(cfg, f, report), **_clt_verdicts(cfg, f, report)}
    return report
