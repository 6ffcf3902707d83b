"""Point sets on [0, 1)^d built from randomized designs.

All jitter is drawn from the ``JITTER`` role of the replicate's streams, so
the plain and Tang-style Latin hypercubes consume the same uniforms and
differ only in their level arrangement.
"""

from __future__ import annotations

import enum
import io
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BadBinCount, OASamplingError, WrongStage
from .gf_oa import OrthogonalArray, Stage
from .randomize import (
    Role,
    SeedSpec,
    batch_expand,
    batch_randomize_symbols,
    batch_tang,
    stream_permutations,
    stream_uniforms,
    within_symbol_ranks,
)

__all__ = [
    "Design",
    "UnitSample",
    "sample_oas",
    "sample_oalh",
    "sample_oalh_tang",
    "sample_srs",
    "sample_lhs",
    "coupled_digit_samples",
    "check_bivariate_stratification",
    "check_univariate_latin",
    "coupling_bound",
    "coupling_holds",
    "batch_points",
    "write_sample_csv",
    "read_sample_csv",
]

# absolute allowance for rounding and nudging of coordinates in [0, 1)
COUPLING_ATOL = 4 * np.finfo(np.float64).eps

# second-digit stream of the coupled X sample; JITTER streams otherwise use symbol 0
_DIGIT_SYMBOL = 1


class Design(enum.Enum):
    OAS = "OAS"
    OALH = "OALH"
    OALH_TANG = "OALH_TANG"
    SRS = "SRS"
    LHS = "LHS"

    @classmethod
    def parse(cls, name: str) -> "Design":
        key = name.strip().upper().replace("-", "_")
        aliases = {"OAL": "OALH", "TANG": "OALH_TANG", "OAL_TANG": "OALH_TANG"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise OASamplingError(f"unknown design {name!r}") from None


@dataclass(frozen=True, eq=False)
class UnitSample:
    points: np.ndarray
    design: Design
    q: int
    seed: SeedSpec

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2:
            raise OASamplingError("points must be an n x d matrix")
        if pts.size and (pts.min() < 0.0 or pts.max() >= 1.0):
            raise OASamplingError("points must lie in [0, 1)")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def _place(cells: np.ndarray, u: np.ndarray, scale: int, coarse: int | None = None) -> np.ndarray:
    """``(cells + u) / scale`` with binning made exact.

    Rounding can push a point across a cell edge by one ulp; such points are
    nudged back so ``floor(x * scale) == cells`` (and the same at the coarse
    resolution ``coarse``, where ``scale`` is a multiple of it).
    """
    x = (cells + u) / scale
    checks = [(scale, cells)]
    if coarse is not None:
        checks.append((coarse, cells // (scale // coarse)))
    for _ in range(64):
        bad = False
        for s, c in checks:
            b = np.floor(x * s)
            hi = b > c
            lo = b < c
            if hi.any():
                x[hi] = np.nextafter(x[hi], -np.inf)
                bad = True
            if lo.any():
                x[lo] = np.nextafter(x[lo], np.inf)
                bad = True
        if not bad:
            return x
    raise OASamplingError("could not place points inside their cells")


def _jitter(master_seed, reps, n, d, extra, symbol=0):
    u = stream_uniforms(
        master_seed, Role.JITTER, n, reps[:, None], np.arange(d)[None, :], symbol, extra
    )
    return np.swapaxes(u, 1, 2)  # (R, n, d)


def batch_points(design, base: OrthogonalArray, master_seed: int, reps, extra: int = 0):
    """Points of shape ``(R, n, d)`` for replicates ``reps`` of ``design``.

    ``base`` supplies ``n``, ``d`` and ``q``; OA designs randomize it afresh
    for each replicate. Equivalent to running the single-sample pipeline
    replicate by replicate.
    """
    design = Design(design)
    reps = np.asarray(reps, dtype=np.int64).reshape(-1)
    n, d, q = base.n, base.d, base.q
    u = _jitter(master_seed, reps, n, d, extra)
    if design is Design.SRS:
        return u.copy()
    if design is Design.LHS:
        perm = stream_permutations(
            master_seed, Role.COL_PERM, n, reps[:, None], np.arange(d)[None, :], 0, extra
        )
        return _place(np.swapaxes(perm, 1, 2), u, n)
    if base.stage is not Stage.BASE:
        raise WrongStage("batch_points needs the BASE array")
    astar = batch_randomize_symbols(base.entries, q, master_seed, reps, extra)
    if design is Design.OAS:
        return _place(astar, u, q)
    add = batch_expand(astar, within_symbol_ranks(base.entries), q, master_seed, reps, extra)
    if design is Design.OALH_TANG:
        add = batch_tang(add, q, master_seed, reps, extra)
    return _place(add, u, q * q, coarse=q)


def _single_jitter(A: OrthogonalArray, seed: SeedSpec, symbol=0):
    return _jitter(seed.master_seed, np.array([seed.replicate]), A.n, A.d, seed.extra, symbol)[0]


def sample_oas(A_star: OrthogonalArray, seed: SeedSpec) -> UnitSample:
    """Jitter each cell of a symbol-randomized array: ``(a* + U) / q``."""
    if A_star.stage is not Stage.RANDOMIZED:
        raise WrongStage(f"expected RANDOMIZED array, got {A_star.stage.value}")
    pts = _place(A_star.entries, _single_jitter(A_star, seed), A_star.q)
    return UnitSample(pts, Design.OAS, A_star.q, seed)


def _sample_latin(A, seed, stage, design):
    if A.stage is not stage:
        raise WrongStage(f"expected {stage.value} array, got {A.stage.value}")
    q = A.q
    pts = _place(A.entries, _single_jitter(A, seed), q * q, coarse=q)
    return UnitSample(pts, design, q, seed)


def sample_oalh(A_dd: OrthogonalArray, seed: SeedSpec) -> UnitSample:
    return _sample_latin(A_dd, seed, Stage.EXPANDED, Design.OALH)


def sample_oalh_tang(A_ddd: OrthogonalArray, seed: SeedSpec) -> UnitSample:
    return _sample_latin(A_ddd, seed, Stage.TANG, Design.OALH_TANG)


def _check_size(n, d):
    if n < 1 or d < 1:
        raise OASamplingError(f"need n >= 1 and d >= 1, got n={n}, d={d}")


def sample_srs(n: int, d: int, seed: SeedSpec) -> UnitSample:
    _check_size(n, d)
    u = _jitter(seed.master_seed, np.array([seed.replicate]), n, d, seed.extra)[0]
    return UnitSample(u, Design.SRS, 0, seed)


def sample_lhs(n: int, d: int, seed: SeedSpec) -> UnitSample:
    _check_size(n, d)
    reps = np.array([seed.replicate])
    perm = stream_permutations(
        seed.master_seed, Role.COL_PERM, n, seed.replicate, np.arange(d), 0, seed.extra
    )
    u = _jitter(seed.master_seed, reps, n, d, seed.extra)[0]
    return UnitSample(_place(perm.T, u, n), Design.LHS, 0, seed)


def coupled_digit_samples(A_star: OrthogonalArray, seed: SeedSpec):
    """An OA sample ``X`` and OA Latin hypercube ``Y`` sharing base-q digits.

    Both share the first digit ``a*`` and everything past the second digit.
    ``X`` takes an independent uniform second digit; ``Y`` takes the
    within-symbol level that :func:`expand_to_latin` assigns under the same
    seed, so ``Y`` coincides with ``sample_oalh(expand_to_latin(A_star,
    seed), seed)``. Hence ``|X - Y| <= (q - 1) / q**2`` coordinatewise.
    """
    if A_star.stage is not Stage.RANDOMIZED:
        raise WrongStage(f"expected RANDOMIZED array, got {A_star.stage.value}")
    q = A_star.q
    reps = np.array([seed.replicate])
    ranks = within_symbol_ranks(A_star.entries)
    fine = batch_expand(A_star.entries[None], ranks, q, seed.master_seed, reps, seed.extra)[0]
    v = _single_jitter(A_star, seed)
    u2 = _single_jitter(A_star, seed, symbol=_DIGIT_SYMBOL)
    x2 = np.minimum(np.floor(u2 * q).astype(np.int64), q - 1)
    x_cells = q * A_star.entries + x2
    X = _place(x_cells, v, q * q, coarse=q)
    Y = _place(fine, v, q * q, coarse=q)
    return UnitSample(X, Design.OAS, q, seed), UnitSample(Y, Design.OALH, q, seed)


def coupling_bound(q: int) -> float:
    return (q - 1) / q**2


def coupling_holds(X: UnitSample, Y: UnitSample, q: int) -> bool:
    """``max |X - Y| <= (q - 1) / q**2`` up to floating-point rounding."""
    dev = np.max(np.abs(X.points - Y.points))
    return bool(dev <= coupling_bound(q) + COUPLING_ATOL)


def _bins(x: np.ndarray, nbins: int) -> np.ndarray:
    return np.floor(x * nbins).astype(np.int64)


def check_bivariate_stratification(S: UnitSample, q: int) -> bool:
    """Every column pair puts ``n / q**2`` points in each ``q x q`` cell."""
    if q < 1 or S.n % (q * q):
        raise BadBinCount(f"{S.n} points cannot fill {q}x{q} cells evenly")
    expected = S.n // (q * q)
    b = _bins(S.points, q)
    for k in range(S.d):
        for l in range(k + 1, S.d):
            counts = np.bincount(b[:, k] * q + b[:, l], minlength=q * q)
            if np.any(counts != expected):
                return False
    return True


def check_univariate_latin(S: UnitSample, bins: int) -> bool:
    """Every column puts ``n / bins`` points in each of ``bins`` equal bins."""
    if bins < 1 or S.n % bins:
        raise BadBinCount(f"{S.n} points cannot fill {bins} bins evenly")
    expected = S.n // bins
    b = _bins(S.points, bins)
    for j in range(S.d):
        if np.any(np.bincount(b[:, j], minlength=bins) != expected):
            return False
    return True


_HEADER = re.compile(r"#\s*design=(\S+)\s+q=(\d+)\s+d=(\d+)\s+seed=(\S+)")


def write_sample_csv(S: UnitSample, path) -> None:
    buf = io.StringIO()
    buf.write(f"# design={S.design.value} q={S.q} d={S.d} seed={S.seed.canonical()}\n")
    for row in S.points:
        buf.write(",".join(format(v, ".17g") for v in row))
        buf.write("\n")
    Path(path).write_text(buf.getvalue())


def read_sample_csv(path) -> UnitSample:
    lines = Path(path).read_text().splitlines()
    m = _HEADER.fullmatch(lines[0].strip()) if lines else None
    if m is None:
        raise OASamplingError("missing or malformed sample CSV header")
    design, q, d, seed = m.groups()
    rows = [[float(v) for v in ln.split(",")] for ln in lines[1:] if ln.strip()]
    pts = np.array(rows, dtype=np.float64).reshape(len(rows), int(d))
    return UnitSample(pts, Design(design), int(q), SeedSpec.parse(seed))
