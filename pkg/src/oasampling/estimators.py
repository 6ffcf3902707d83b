"""Sample-mean estimators and replicate statistics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .anova import Integrand
from .errors import DegenerateVariance, DimensionMismatch, OASamplingError, TooFewValues
from .randomize import SeedSpec
from .sampler import Design, UnitSample

__all__ = [
    "EstimateRecord",
    "WStatistic",
    "estimate",
    "batch_estimates",
    "replicate_variance",
    "standardized_values",
    "standardize",
    "write_estimates_csv",
    "read_estimates_csv",
]


@dataclass(frozen=True)
class EstimateRecord:
    value: float
    design: Design
    q: int
    d: int
    seed: SeedSpec
    integrand_id: str

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise OASamplingError(f"non-finite estimate {self.value}")


@dataclass(frozen=True)
class WStatistic:
    w: float
    sigma_used: float
    mu_used: float


def estimate(f: Integrand, S: UnitSample) -> EstimateRecord:
    """Equal-weight mean of ``f`` over the sample points."""
    if S.d != f.dim:
        raise DimensionMismatch(f"sample has {S.d} columns, integrand expects {f.dim}")
    value = float(np.mean(f(S.points)))
    return EstimateRecord(value, S.design, S.q, S.d, S.seed, f.name)


def batch_estimates(f: Integrand, points: np.ndarray) -> np.ndarray:
    """Per-replicate means for points of shape ``(R, n, d)``."""
    if points.shape[-1] != f.dim:
        raise DimensionMismatch(f"points have {points.shape[-1]} columns, integrand expects {f.dim}")
    return np.mean(f(points), axis=1)


def replicate_variance(values) -> float:
    v = np.asarray(values, dtype=np.float64)
    if v.size < 2:
        raise TooFewValues("need at least two values for a variance")
    return float(np.var(v, ddof=1))


def standardized_values(values, mu: float) -> tuple[np.ndarray, float]:
    """``(values - mu) / sd`` with ``sd`` the replicate standard deviation."""
    v = np.asarray(values, dtype=np.float64)
    sd = math.sqrt(replicate_variance(v))
    if sd == 0.0:
        raise DegenerateVariance("replicate values are constant")
    return (v - mu) / sd, sd


def standardize(values, mu: float) -> list[WStatistic]:
    w, sd = standardized_values(values, mu)
    return [WStatistic(float(x), sd, float(mu)) for x in w]


_FIELDS = ("design", "q", "d", "integrand", "seed", "value")


def write_estimates_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_FIELDS)
        for r in records:
            writer.writerow(
                [r.design.value, r.q, r.d, r.integrand_id, r.seed.canonical(), format(r.value, ".17g")]
            )


def read_estimates_csv(path) -> list[EstimateRecord]:
    with open(Path(path), newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        EstimateRecord(
            float(row["value"]),
            Design(row["design"]),
            int(row["q"]),
            int(row["d"]),
            SeedSpec.parse(row["seed"]),
            row["integrand"],
        )
        for row in rows
    ]
