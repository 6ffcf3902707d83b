"""Strength-2 orthogonal arrays over prime fields.

The base array is Bose's affine-plane construction: rows are indexed by
``(alpha, beta)`` in ``GF(q)^2`` and column ``j`` holds ``alpha * j + beta``.
A ``(q + 1)``-th column carrying ``alpha`` alone is appended when the full
``d = q + 1`` is requested.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionTooLarge,
    DimensionTooSmall,
    NonPrimeQ,
    OASamplingError,
    StrengthExceedsDimension,
)

__all__ = [
    "Stage",
    "OrthogonalArray",
    "is_prime",
    "construct_bose_oa",
    "verify_strength",
    "write_oa",
    "read_oa",
    "format_oa",
    "parse_oa",
]


class Stage(enum.Enum):
    BASE = "BASE"
    RANDOMIZED = "RANDOMIZED"
    EXPANDED = "EXPANDED"
    TANG = "TANG"


@dataclass(frozen=True, eq=False)
class OrthogonalArray:
    """An ``n x d`` symbol matrix with its design metadata.

    ``q`` is the base symbol count. Stages ``EXPANDED`` and ``TANG`` hold
    symbols in ``{0, ..., q**2 - 1}``; ``t`` still records the strength of
    the array they were expanded from.
    """

    entries: np.ndarray
    q: int
    t: int
    stage: Stage = Stage.BASE

    def __post_init__(self):
        entries = np.ascontiguousarray(self.entries, dtype=np.int64)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        if entries.ndim != 2:
            raise OASamplingError("entries must be a 2-d matrix")
        if entries.size and (entries.min() < 0 or entries.max() >= self.symbols):
            raise OASamplingError(
                f"entries out of range for stage {self.stage.value} "
                f"(symbols 0..{self.symbols - 1})"
            )

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def d(self) -> int:
        return self.entries.shape[1]

    @property
    def symbols(self) -> int:
        """Size of the symbol domain for this stage."""
        if self.stage in (Stage.EXPANDED, Stage.TANG):
            return self.q**2
        return self.q

    def __eq__(self, other):
        if not isinstance(other, OrthogonalArray):
            return NotImplemented
        return (
            self.q == other.q
            and self.t == other.t
            and self.stage == other.stage
            and np.array_equal(self.entries, other.entries)
        )

    def __hash__(self):
        return hash((self.q, self.t, self.stage, self.entries.tobytes()))


def is_prime(q: int) -> bool:
    if q < 2:
        return False
    if q < 4:
        return True
    if q % 2 == 0:
        return False
    f = 3
    while f * f <= q:
        if q % f == 0:
            return False
        f += 2
    return True


def construct_bose_oa(q: int, d: int) -> OrthogonalArray:
    """Bose OA(q^2, d, q, 2) for prime ``q`` and ``2 <= d <= q + 1``."""
    q, d = int(q), int(d)
    if not is_prime(q):
        raise NonPrimeQ(f"q={q} is not prime")
    if d > q + 1:
        raise DimensionTooLarge(f"d={d} exceeds q+1={q + 1}")
    if d < 2:
        raise DimensionTooSmall(f"d={d} is below 2")

    alpha, beta = np.divmod(np.arange(q * q, dtype=np.int64), q)
    ncols = min(d, q)
    cols = [(alpha * j + beta) % q for j in range(ncols)]
    if d == q + 1:
        cols.append(alpha)
    return OrthogonalArray(np.stack(cols, axis=1), q=q, t=2, stage=Stage.BASE)


def verify_strength(A: OrthogonalArray, t: int) -> bool:
    """Exact counting check that every ``t``-column projection is balanced."""
    if t > A.d:
        raise StrengthExceedsDimension(f"t={t} exceeds d={A.d}")
    if t < 1:
        raise OASamplingError("t must be at least 1")
    s = A.symbols
    cells = s**t
    if A.n % cells:
        return False
    expected = A.n // cells
    E = A.entries
    weights = s ** np.arange(t - 1, -1, -1, dtype=np.int64)
    for cols in itertools.combinations(range(A.d), t):
        code = E[:, cols] @ weights
        counts = np.bincount(code, minlength=cells)
        if counts.shape[0] != cells or np.any(counts != expected):
            return False
    return True


def format_oa(A: OrthogonalArray) -> str:
    lines = [f"oa {A.n} {A.d} {A.q} {A.t} {A.stage.value}"]
    lines.extend(" ".join(str(int(v)) for v in row) for row in A.entries)
    return "\n".join(lines) + "\n"


def parse_oa(text: str) -> OrthogonalArray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise OASamplingError("empty OA file")
    head = lines[0].split()
    if len(head) != 6 or head[0] != "oa":
        raise OASamplingError(f"bad OA header: {lines[0]!r}")
    n, d, q, t = (int(v) for v in head[1:5])
    stage = Stage(head[5])
    rows = [[int(v) for v in ln.split()] for ln in lines[1:]]
    entries = np.array(rows, dtype=np.int64).reshape(len(rows), -1) if rows else np.zeros((0, d), np.int64)
    if entries.shape != (n, d):
        raise OASamplingError(f"OA body has shape {entries.shape}, header says {(n, d)}")
    return OrthogonalArray(entries, q=q, t=t, stage=stage)


def write_oa(A: OrthogonalArray, path) -> None:
    Path(path).write_text(format_oa(A))


def read_oa(path) -> OrthogonalArray:
    return parse_oa(Path(path).read_text())
