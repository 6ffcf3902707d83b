"""Integrands, grid ANOVA decomposition and base-q Haar analysis.

All integrals are composite midpoint sums on an ``m``-point-per-axis grid.
Midpoints never touch cell edges, and when ``m`` is a multiple of ``q**K``
every grid cell sits inside one base-q cell of level ``K``, so Haar inner
products and box averages are exact sums over the tabulated values.
"""

from __future__ import annotations

import functools
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import (
    DimensionTooLarge,
    DimensionTooSmall,
    GridMisaligned,
    IndexOutOfRange,
    OASamplingError,
    TruncationExceeded,
    UnknownIntegrand,
)
from .randomize import Role, SeedSpec, stream_uniforms

__all__ = [
    "Integrand",
    "INTEGRANDS",
    "get_integrand",
    "tabulate",
    "mu_quadrature",
    "mu_mc",
    "quadrature_tolerance",
    "AnovaDecomposition",
    "decompose",
    "frem_l2",
    "HaarIndex",
    "NuIndex",
    "haar_psi",
    "haar_coefficient",
    "haar_coefficients",
    "haar_partial_sum",
    "nu_table",
    "nu_coefficient",
]

MAX_QUAD_DIM = 4
# tau_q = TAU_C / m**2; the product integrand's frem_l2 error is about 1.7e-3 / m**2
TAU_C = 1e-2
DEFAULT_MAX_NU_LEVEL = 2


@dataclass(frozen=True)
class Integrand:
    """A real function on [0, 1)^d evaluated on arrays of shape ``(..., d)``."""

    name: str
    dim: int
    func: Callable[[np.ndarray], np.ndarray]
    known_mu: float | None = None
    additive: bool = False
    smooth: bool = True

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise OASamplingError(f"{self.name} expects {self.dim} coordinates, got {x.shape[-1]}")
        return np.broadcast_to(self.func(x), x.shape[:-1])

    def affine(self, a: float, b: float) -> "Integrand":
        """``a * f + b`` with the metadata carried along."""
        mu = None if self.known_mu is None else a * self.known_mu + b
        return Integrand(
            f"{a!r}*{self.name}+{b!r}",
            self.dim,
            functools.partial(_affine, self.func, a, b),
            mu,
            self.additive,
            self.smooth,
        )


def _affine(func, a, b, x):
    return a * func(x) + b


def _product(x):
    return np.prod(x, axis=-1)


def _additive(x):
    return np.sum(x * x, axis=-1)


def _centered_product(x):
    return np.prod(x - 0.5, axis=-1)


def _gaussian(x):
    return np.exp(-np.sum((x - 0.5) ** 2, axis=-1))


def _indicator(x):
    return (np.sum(x, axis=-1) < 0.5 * x.shape[-1]).astype(np.float64)


def _constant(x):
    return np.ones(x.shape[:-1])


INTEGRANDS: dict[str, Callable[[int], Integrand]] = {
    "product": lambda d: Integrand("product", d, _product, 0.5**d),
    "additive": lambda d: Integrand("additive", d, _additive, d / 3, additive=True),
    "centered_product": lambda d: Integrand("centered_product", d, _centered_product, 0.0),
    "gaussian": lambda d: Integrand(
        "gaussian", d, _gaussian, (math.sqrt(math.pi) * math.erf(0.5)) ** d
    ),
    "indicator": lambda d: Integrand("indicator", d, _indicator, 0.5, smooth=False),
    "constant": lambda d: Integrand("constant", d, _constant, 1.0, additive=True),
}


def get_integrand(name: str, d: int) -> Integrand:
    try:
        factory = INTEGRANDS[name]
    except KeyError:
        raise UnknownIntegrand(f"unknown integrand {name!r}; known: {sorted(INTEGRANDS)}") from None
    if d < 1:
        raise DimensionTooSmall("d must be positive")
    return factory(d)


def _midpoints(m: int) -> np.ndarray:
    return (np.arange(m) + 0.5) / m


@functools.lru_cache(maxsize=8)
def _tabulate_cached(f: Integrand, m: int) -> np.ndarray:
    d = f.dim
    mids = _midpoints(m)
    out = np.empty((m,) * d)
    rest = np.stack(np.meshgrid(*([mids] * (d - 1)), indexing="ij"), axis=-1) if d > 1 else None
    for i, x0 in enumerate(mids):
        if rest is None:
            out[i] = f(np.array([x0]))
        else:
            pts = np.concatenate([np.full(rest.shape[:-1] + (1,), x0), rest], axis=-1)
            out[i] = f(pts)
    out.setflags(write=False)
    return out


def tabulate(f: Integrand, m: int) -> np.ndarray:
    """Values of ``f`` on the tensor midpoint grid, shape ``(m,) * d``."""
    if f.dim > MAX_QUAD_DIM:
        raise DimensionTooLarge(f"tensor quadrature supports d <= {MAX_QUAD_DIM}, got {f.dim}")
    if m < 1:
        raise OASamplingError("m must be positive")
    return _tabulate_cached(f, int(m))


def quadrature_tolerance(m: int) -> float:
    return TAU_C / m**2


def mu_quadrature(f: Integrand, m: int) -> float:
    return float(tabulate(f, m).mean())


def mu_mc(f: Integrand, n: int, seed: SeedSpec) -> tuple[float, float]:
    """Simple random sampling mean and its standard error."""
    if n < 2:
        raise OASamplingError("mu_mc needs n >= 2")
    u = stream_uniforms(
        seed.master_seed, Role.JITTER, n, seed.replicate, np.arange(f.dim), 0, seed.extra
    )
    y = f(u.T)
    return float(y.mean()), float(y.std(ddof=1) / math.sqrt(n))


def _grid_index(x, m):
    return np.minimum((np.asarray(x, dtype=np.float64) * m).astype(np.int64), m - 1)


@dataclass(frozen=True, eq=False)
class AnovaDecomposition:
    """Grid tables for the mean, main effects, bivariate effects and remainder.

    Main and bivariate effects are piecewise constant on the grid cells; the
    remainder at an arbitrary point is ``f`` minus everything else.
    """

    f: Integrand
    m: int
    mu: float
    main: tuple[np.ndarray, ...]
    pair: Mapping[tuple[int, int], np.ndarray]
    remainder_table: np.ndarray
    frem_l2: float
    extras: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.f.dim

    def main_effect(self, j: int, xj) -> np.ndarray:
        return self.main[j][_grid_index(xj, self.m)]

    def pair_effect(self, k: int, l: int, xk, xl) -> np.ndarray:
        if k > l:
            k, l, xk, xl = l, k, xl, xk
        return self.pair[(k, l)][_grid_index(xk, self.m), _grid_index(xl, self.m)]

    def low_order(self, x) -> np.ndarray:
        """``mu + sum f_j + sum f_kl`` at points ``x``."""
        x = np.asarray(x, dtype=np.float64)
        total = np.full(x.shape[:-1], self.mu)
        for j in range(self.d):
            total = total + self.main_effect(j, x[..., j])
        for k, l in self.pair:
            total = total + self.pair_effect(k, l, x[..., k], x[..., l])
        return total

    def remainder(self, x) -> np.ndarray:
        return self.f(x) - self.low_order(x)

    def component_l2(self) -> dict:
        return {
            "main": [float(np.mean(t * t)) for t in self.main],
            "pair": {f"{k},{l}": float(np.mean(t * t)) for (k, l), t in self.pair.items()},
            "remainder": self.frem_l2,
        }

    def to_json(self) -> str:
        rec = {
            "integrand": self.f.name,
            "d": self.d,
            "m": self.m,
            "mu": self.mu,
            "frem_l2": self.frem_l2,
            "component_l2": self.component_l2(),
        }
        return json.dumps(rec, indent=2, sort_keys=True)


def decompose(f: Integrand, m: int) -> AnovaDecomposition:
    d = f.dim
    if d > MAX_QUAD_DIM:
        raise DimensionTooLarge(f"decomposition supports d <= {MAX_QUAD_DIM}, got {d}")
    if d < 3:
        raise DimensionTooSmall(f"decomposition needs d >= 3, got {d}")
    G = tabulate(f, m)
    mu = float(G.mean())
    axes = tuple(range(d))
    main = []
    for j in range(d):
        main.append(G.mean(axis=tuple(a for a in axes if a != j)) - mu)
    pair = {}
    for k, l in itertools.combinations(range(d), 2):
        marg = G.mean(axis=tuple(a for a in axes if a not in (k, l)))
        pair[(k, l)] = marg - mu - main[k][:, None] - main[l][None, :]
    rem = G - mu
    for j in range(d):
        shape = [1] * d
        shape[j] = m
        rem = rem - main[j].reshape(shape)
    for (k, l), t in pair.items():
        shape = [1] * d
        shape[k] = shape[l] = m
        rem = rem - t.reshape(shape)
    for t in main:
        t.setflags(write=False)
    for t in pair.values():
        t.setflags(write=False)
    rem.setflags(write=False)
    return AnovaDecomposition(f, m, mu, tuple(main), pair, rem, float(np.mean(rem * rem)))


def frem_l2(dec: AnovaDecomposition) -> float:
    return dec.frem_l2


# Base-q Haar analysis


@dataclass(frozen=True)
class HaarIndex:
    level: int
    shift: int
    digit: int

    def validate(self, q: int) -> None:
        if self.level < 0 or not 0 <= self.shift < q**self.level or not 0 <= self.digit < q:
            raise IndexOutOfRange(f"{self} is out of range for q={q}")


@dataclass(frozen=True)
class NuIndex:
    """Truncation levels ``u`` and the leading base-q digits per column."""

    u: tuple[int, ...]
    digits: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.u) != len(self.digits):
            raise IndexOutOfRange("u and digits must have one entry per column")
        for uj, dj in zip(self.u, self.digits):
            if uj < 0 or len(dj) != uj:
                raise IndexOutOfRange(f"column with u_j={uj} needs exactly {uj} digits, got {dj}")

    def cells(self, q: int) -> tuple[int, ...]:
        out = []
        for dj in self.digits:
            cell = 0
            for c in dj:
                if not 0 <= c < q:
                    raise IndexOutOfRange(f"digit {c} outside 0..{q - 1}")
                cell = cell * q + c
            out.append(cell)
        return tuple(out)


def _psi_from_fine(q: int, idx: HaarIndex, fine) -> np.ndarray:
    # fine: integer cell index at resolution q**(level + 1)
    k, t, c = idx.level, idx.shift, idx.digit
    fine = np.asarray(fine)
    inner = (fine == q * t + c) * q ** ((k + 1) / 2)
    outer = (fine // q == t) * q ** ((k - 1) / 2)
    return inner - outer


def haar_psi(q: int, idx: HaarIndex, x) -> np.ndarray | float:
    """Base-q Haar function ``psi_{k,t,c}`` at ``x`` in [0, 1)."""
    idx.validate(q)
    xa = np.asarray(x, dtype=np.float64)
    if np.any(xa < 0) or np.any(xa >= 1):
        raise IndexOutOfRange("haar_psi is defined on [0, 1)")
    fine = np.floor(xa * q ** (idx.level + 1)).astype(np.int64)
    out = _psi_from_fine(q, idx, fine)
    return float(out) if out.ndim == 0 else out


def _level_basis(q: int, level: int, m: int) -> np.ndarray:
    """Matrix of all ``psi_{level,t,c}`` on the grid midpoints, rows ``q*t + c``."""
    res = q ** (level + 1)
    fine = np.arange(m) * res // m
    rows = np.arange(res)
    inner = (fine[None, :] == rows[:, None]) * q ** ((level + 1) / 2)
    outer = (fine[None, :] // q == rows[:, None] // q) * q ** ((level - 1) / 2)
    return inner - outer


def _check_alignment(q: int, finest: int, m: int) -> None:
    if m % q**finest:
        raise GridMisaligned(f"m={m} is not a multiple of q**{finest}={q ** finest}")


def _contract(G: np.ndarray, mats) -> np.ndarray:
    """Contract axis ``i`` of ``G`` with ``mats[i]`` (shape ``(r_i, m)``)."""
    out = G
    for mat in mats:
        # always contract the current leading axis, appending the result axis
        out = np.tensordot(out, mat, axes=([0], [1]))
    return out


def haar_coefficients(f: Integrand, q: int, levels, m: int) -> np.ndarray:
    """All product-basis inner products for per-column levels.

    ``levels[j]`` is the Haar level on column ``j`` or ``None`` for an
    inactive column. Active axes of the result have length ``q**(level+1)``
    indexed by ``q * shift + digit``; inactive axes have length 1.
    """
    if len(levels) != f.dim:
        raise IndexOutOfRange("levels needs one entry per column")
    active = [k for k in levels if k is not None]
    _check_alignment(q, max(active, default=-1) + 1, m)
    G = tabulate(f, m)
    mats = []
    for k in levels:
        if k is None:
            mats.append(np.full((1, m), 1.0 / m))
        else:
            mats.append(_level_basis(q, k, m) / m)
    return _contract(G, mats)


def haar_coefficient(f: Integrand, q: int, multi_idx, m: int) -> float:
    """``<f, prod_r psi_r>`` for a mapping ``column -> HaarIndex``.

    A bare :class:`HaarIndex` is taken to act on column 0.
    """
    if isinstance(multi_idx, HaarIndex):
        multi_idx = {0: multi_idx}
    if f.dim > MAX_QUAD_DIM:
        raise DimensionTooLarge(f"tensor quadrature supports d <= {MAX_QUAD_DIM}")
    levels = [None] * f.dim
    for j, idx in multi_idx.items():
        if not 0 <= j < f.dim:
            raise IndexOutOfRange(f"column {j} outside 0..{f.dim - 1}")
        idx.validate(q)
        levels[j] = idx.level
    finest = max((idx.level + 1 for idx in multi_idx.values()), default=0)
    _check_alignment(q, finest, m)
    G = tabulate(f, m)
    mats = []
    for j in range(f.dim):
        if j in multi_idx:
            idx = multi_idx[j]
            fine = np.arange(m) * q ** (idx.level + 1) // m
            mats.append(_psi_from_fine(q, idx, fine)[None, :] / m)
        else:
            mats.append(np.full((1, m), 1.0 / m))
    return float(_contract(G, mats).reshape(()))


def haar_partial_sum(f: Integrand, q: int, max_level: int, m: int) -> np.ndarray:
    """One-dimensional Haar reconstruction through ``max_level`` on the grid."""
    if f.dim != 1:
        raise OASamplingError("haar_partial_sum is one-dimensional")
    _check_alignment(q, max_level + 1, m)
    G = tabulate(f, m)
    out = np.full(m, G.mean())
    for k in range(max_level + 1):
        B = _level_basis(q, k, m)
        out = out + (B @ G / m) @ B
    return out


def _anchor_basis(q: int, u: int) -> np.ndarray:
    """``psi_{u-1,t,c}`` at the anchors of all level-``u`` cells, shape (cells, basis)."""
    cells = np.arange(q**u)
    rows = np.arange(q**u)
    inner = (cells[:, None] == rows[None, :]) * q ** (u / 2)
    outer = (cells[:, None] // q == rows[None, :] // q) * q ** ((u - 2) / 2)
    return inner - outer


def _nu_closed(f, q, u, m):
    if not any(u):
        return np.full((1,) * f.dim, tabulate(f, m).mean())
    levels = [uj - 1 if uj else None for uj in u]
    C = haar_coefficients(f, q, levels, m)
    mats = [np.ones((1, 1)) if uj == 0 else _anchor_basis(q, uj) for uj in u]
    return _contract(C, mats)


def _box_means(G, q, u):
    d = G.ndim
    m = G.shape[0]
    shape = []
    for uj in u:
        shape.extend([q**uj, m // q**uj])
    return G.reshape(shape).mean(axis=tuple(range(1, 2 * d, 2)))


def _nu_recursive(f, q, u, m, memo):
    if u in memo:
        return memo[u]
    G = tabulate(f, m)
    out = _box_means(G, q, u).copy()
    for lower in itertools.product(*(range(uj + 1) for uj in u)):
        if lower == u:
            continue
        sub = _nu_recursive(f, q, lower, m, memo)
        for axis, (uj, lj) in enumerate(zip(u, lower)):
            if uj != lj:
                sub = np.repeat(sub, q ** (uj - lj), axis=axis)
        out -= sub
    memo[u] = out
    return out


def nu_table(f: Integrand, q: int, u, m: int, method: str = "closed",
             max_level: int = DEFAULT_MAX_NU_LEVEL) -> np.ndarray:
    """``nu_u`` for every digit assignment at once.

    Axis ``j`` has length ``q**u_j`` and is indexed by the level-``u_j``
    cell whose base-q digits are the ``c~_{j,k}``. ``method`` is ``"closed"``
    (Haar-coefficient sum) or ``"recursive"`` (box means minus lower terms).
    """
    u = tuple(int(v) for v in u)
    if len(u) != f.dim:
        raise IndexOutOfRange("u needs one level per column")
    if any(v < 0 for v in u):
        raise IndexOutOfRange("levels must be nonnegative")
    if max(u, default=0) > max_level:
        raise TruncationExceeded(f"u={u} exceeds the truncation level {max_level}")
    if f.dim > MAX_QUAD_DIM:
        raise DimensionTooLarge(f"tensor quadrature supports d <= {MAX_QUAD_DIM}")
    _check_alignment(q, max(u, default=0), m)
    if method == "closed":
        return _nu_closed(f, q, u, m)
    if method == "recursive":
        return _nu_recursive(f, q, u, m, {})
    raise OASamplingError(f"unknown method {method!r}")


def nu_coefficient(f: Integrand, q: int, idx: NuIndex, m: int, method: str = "closed",
                   max_level: int = DEFAULT_MAX_NU_LEVEL) -> float:
    table = nu_table(f, q, idx.u, m, method, max_level)
    cells = tuple(c if uj else 0 for c, uj in zip(idx.cells(q), idx.u))
    return float(table[cells])
