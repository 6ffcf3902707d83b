"""Keyed counter-based random streams and the randomization stages.

Every random quantity is a pure function of ``(master_seed, stream key,
draw index)``. The stream key is packed into the Philox4x32-10 counter, the
64-bit master seed is the Philox key, so distinct keys give disjoint counter
ranges and replicates can be generated in any order or all at once.

Counter layout (four 32-bit words)::

    w0 = block index within the stream
    w1 = replicate index
    w2 = role << 28 | symbol << 16 | column
    w3 = extra
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, replace

import numpy as np

from .errors import OASamplingError, WrongStage, WrongStrength, ZeroLength
from .gf_oa import OrthogonalArray, Stage

__all__ = [
    "Role",
    "SeedSpec",
    "philox4x32",
    "stream_uniforms",
    "stream_indices",
    "stream_permutations",
    "uniform_permutation",
    "randomize_symbols",
    "expand_to_latin",
    "tang_randomize",
    "within_symbol_ranks",
    "batch_randomize_symbols",
    "batch_expand",
    "batch_tang",
]

_MASK32 = 0xFFFFFFFF
_PHILOX_M0 = 0xD2511F53
_PHILOX_M1 = 0xCD9E8D57
_PHILOX_W0 = 0x9E3779B9
_PHILOX_W1 = 0xBB67AE85

_MAX_COLUMN = 1 << 16
_MAX_SYMBOL = 1 << 12


class Role(enum.IntEnum):
    COL_PERM = 0
    WITHIN_SYMBOL_PERM = 1
    JITTER = 2
    TANG_EXTRA = 3


@dataclass(frozen=True)
class SeedSpec:
    """Address of one random substream.

    Stage operations treat ``column``, ``role`` and ``symbol`` as slots they
    fill in themselves; only ``master_seed``, ``replicate`` and ``extra``
    are read from the spec passed in.
    """

    master_seed: int
    replicate: int = 0
    column: int = 0
    role: Role = Role.JITTER
    symbol: int | None = None
    extra: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise OASamplingError("master_seed must be an unsigned 64-bit integer")
        if not 0 <= self.replicate < 2**32:
            raise OASamplingError("replicate index must fit in 32 bits")
        if not 0 <= self.column < _MAX_COLUMN:
            raise OASamplingError(f"column must be below {_MAX_COLUMN}")
        if self.symbol is not None and not 0 <= self.symbol < _MAX_SYMBOL:
            raise OASamplingError(f"symbol must be below {_MAX_SYMBOL}")
        if not 0 <= self.extra < 2**32:
            raise OASamplingError("extra must fit in 32 bits")
        object.__setattr__(self, "role", Role(self.role))

    def with_(self, **changes) -> "SeedSpec":
        return replace(self, **changes)

    def canonical(self) -> str:
        parts = [
            f"seed={self.master_seed}",
            f"rep={self.replicate}",
            f"col={self.column}",
            f"role={self.role.name}",
        ]
        if self.symbol is not None:
            parts.append(f"sym={self.symbol}")
        parts.append(f"extra={self.extra}")
        return ";".join(parts)

    __str__ = canonical

    @classmethod
    def parse(cls, text: str) -> "SeedSpec":
        m = re.fullmatch(
            r"seed=(\d+);rep=(\d+);col=(\d+);role=([A-Z_]+)(?:;sym=(\d+))?;extra=(\d+)",
            text.strip(),
        )
        if m is None:
            raise OASamplingError(f"not a canonical seed string: {text!r}")
        seed, rep, col, role, sym, extra = m.groups()
        return cls(
            int(seed),
            int(rep),
            int(col),
            Role[role],
            None if sym is None else int(sym),
            int(extra),
        )


def philox4x32(counter, key, rounds: int = 10):
    """Vectorized Philox4x32 block function.

    ``counter`` is a 4-sequence of broadcastable arrays of 32-bit words and
    ``key`` a pair of 32-bit words. Returns four uint64 arrays holding the
    32-bit output words.
    """
    c0, c1, c2, c3 = np.broadcast_arrays(*(np.asarray(c, dtype=np.uint64) for c in counter))
    k0 = np.uint64(int(key[0]) & _MASK32)
    k1 = np.uint64(int(key[1]) & _MASK32)
    m0, m1 = np.uint64(_PHILOX_M0), np.uint64(_PHILOX_M1)
    mask, shift = np.uint64(_MASK32), np.uint64(32)
    for r in range(rounds):
        if r:
            k0 = np.uint64((int(k0) + _PHILOX_W0) & _MASK32)
            k1 = np.uint64((int(k1) + _PHILOX_W1) & _MASK32)
        p0 = c0 * m0
        p1 = c2 * m1
        c0, c1, c2, c3 = (p1 >> shift) ^ c1 ^ k0, p1 & mask, (p0 >> shift) ^ c3 ^ k1, p0 & mask
    return c0, c1, c2, c3


def _stream_word(role, column, symbol):
    column = np.asarray(column, dtype=np.uint64)
    symbol = np.asarray(symbol, dtype=np.uint64)
    return (np.uint64(int(role)) << np.uint64(28)) | (symbol << np.uint64(16)) | column


def stream_uniforms(master_seed, role, size, replicate=0, column=0, symbol=0, extra=0):
    """Uniform doubles on [0, 1) for a broadcast batch of streams.

    ``replicate``, ``column``, ``symbol`` and ``extra`` broadcast against
    each other; the result has shape ``broadcast_shape + (size,)``. Each
    Philox block yields two 53-bit doubles.
    """
    if size < 0:
        raise OASamplingError("size must be nonnegative")
    rep = np.asarray(replicate, dtype=np.uint64)
    word2 = _stream_word(role, column, symbol)
    ext = np.asarray(extra, dtype=np.uint64)
    shape = np.broadcast_shapes(rep.shape, word2.shape, ext.shape)
    nblocks = (size + 1) // 2
    blocks = np.arange(nblocks, dtype=np.uint64)
    expand = (...,) + (None,)
    x0, x1, x2, x3 = philox4x32(
        (blocks, rep[expand], word2[expand], ext[expand]),
        (master_seed & _MASK32, master_seed >> 32),
    )
    five, six = np.uint64(5), np.uint64(6)
    a = ((x0 >> five).astype(np.float64) * 67108864.0 + (x1 >> six)) * 2.0**-53
    b = ((x2 >> five).astype(np.float64) * 67108864.0 + (x3 >> six)) * 2.0**-53
    out = np.stack([a, b], axis=-1).reshape(shape + (2 * nblocks,))
    return out[..., :size]


def stream_indices(master_seed, role, bound, size, replicate=0, column=0, symbol=0, extra=0):
    """Integers in ``[0, bound)``, four per Philox block, by 32-bit multiply-shift.

    The bias is at most ``bound / 2**32`` per value, so this is for
    resampling, not for permutations.
    """
    if not 1 <= bound < 2**32:
        raise OASamplingError("bound must lie in [1, 2**32)")
    rep = np.asarray(replicate, dtype=np.uint64)
    word2 = _stream_word(role, column, symbol)
    ext = np.asarray(extra, dtype=np.uint64)
    shape = np.broadcast_shapes(rep.shape, word2.shape, ext.shape)
    nblocks = (size + 3) // 4
    blocks = np.arange(nblocks, dtype=np.uint64)
    expand = (...,) + (None,)
    words = philox4x32(
        (blocks, rep[expand], word2[expand], ext[expand]),
        (master_seed & _MASK32, master_seed >> 32),
    )
    w = np.stack(words, axis=-1).reshape(shape + (4 * nblocks,))[..., :size]
    return ((w * np.uint64(bound)) >> np.uint64(32)).astype(np.int64)


def _fisher_yates(u: np.ndarray) -> np.ndarray:
    """Permutations of ``range(m)`` from uniforms of shape ``(..., m)``."""
    m = u.shape[-1]
    perm = np.broadcast_to(np.arange(m, dtype=np.int64), u.shape).copy()
    flat = perm.reshape(-1, m)
    uf = u.reshape(-1, m)
    rows = np.arange(flat.shape[0])
    for i in range(m - 1, 0, -1):
        j = np.minimum((uf[:, i] * (i + 1)).astype(np.int64), i)
        tmp = flat[rows, j].copy()
        flat[rows, j] = flat[:, i]
        flat[:, i] = tmp
    return flat.reshape(u.shape)


def stream_permutations(master_seed, role, m, replicate=0, column=0, symbol=0, extra=0):
    """Uniform permutations of ``range(m)``, one per broadcast stream."""
    if m < 1:
        raise ZeroLength("permutation length must be at least 1")
    u = stream_uniforms(master_seed, role, m, replicate, column, symbol, extra)
    return _fisher_yates(u)


def uniform_permutation(seed: SeedSpec, m: int) -> np.ndarray:
    """Fisher-Yates permutation of ``range(m)`` drawn from ``seed``'s stream."""
    if m < 1:
        raise ZeroLength("permutation length must be at least 1")
    return stream_permutations(
        seed.master_seed,
        seed.role,
        m,
        seed.replicate,
        seed.column,
        seed.symbol or 0,
        seed.extra,
    )


# Batched stage kernels. Arrays carry a leading replicate axis.


def _column_perms(master_seed, reps, d, q, extra):
    return stream_permutations(
        master_seed, Role.COL_PERM, q, reps[:, None], np.arange(d)[None, :], 0, extra
    )


def _symbol_perms(master_seed, role, reps, d, q, extra):
    # shape (R, d, q symbols, q levels)
    return stream_permutations(
        master_seed,
        role,
        q,
        reps[:, None, None],
        np.arange(d)[None, :, None],
        np.arange(q)[None, None, :],
        extra,
    )


def within_symbol_ranks(entries: np.ndarray) -> np.ndarray:
    """Position-order rank of each entry among equal entries of its column."""
    n, d = entries.shape
    ranks = np.empty_like(entries)
    for j in range(d):
        order = np.argsort(entries[:, j], kind="stable")
        sorted_vals = entries[order, j]
        starts = np.flatnonzero(np.r_[True, sorted_vals[1:] != sorted_vals[:-1]])
        group_start = np.repeat(starts, np.diff(np.r_[starts, n]))
        ranks[order, j] = np.arange(n) - group_start
    return ranks


def batch_randomize_symbols(base: np.ndarray, q: int, master_seed: int, reps, extra=0):
    """A -> A* for many replicates; returns shape ``(R, n, d)``."""
    reps = np.asarray(reps, dtype=np.int64)
    d = base.shape[1]
    perms = _column_perms(master_seed, reps, d, q, extra)
    return perms[:, np.arange(d)[None, :], base]


def batch_expand(astar: np.ndarray, ranks: np.ndarray, q: int, master_seed: int, reps, extra=0):
    """A* -> A** for many replicates.

    ``ranks`` are the within-symbol position ranks, identical for every
    replicate because the symbol permutation only relabels groups.
    """
    reps = np.asarray(reps, dtype=np.int64)
    d = astar.shape[2]
    levels = _symbol_perms(master_seed, Role.WITHIN_SYMBOL_PERM, reps, d, q, extra)
    r = np.arange(len(reps))[:, None, None]
    j = np.arange(d)[None, None, :]
    return q * astar + levels[r, j, astar, ranks[None, :, :]]


def batch_tang(add: np.ndarray, q: int, master_seed: int, reps, extra=0):
    """A** -> A*** for many replicates."""
    reps = np.asarray(reps, dtype=np.int64)
    d = add.shape[2]
    extra_perms = _symbol_perms(master_seed, Role.TANG_EXTRA, reps, d, q, extra)
    r = np.arange(len(reps))[:, None, None]
    j = np.arange(d)[None, None, :]
    symbol, level = np.divmod(add, q)
    return q * symbol + extra_perms[r, j, symbol, level]


def randomize_symbols(A: OrthogonalArray, seed: SeedSpec) -> OrthogonalArray:
    """Apply an independent uniform symbol permutation to every column."""
    if A.stage is not Stage.BASE:
        raise WrongStage(f"expected BASE array, got {A.stage.value}")
    out = batch_randomize_symbols(A.entries, A.q, seed.master_seed, [seed.replicate], seed.extra)
    return OrthogonalArray(out[0], q=A.q, t=A.t, stage=Stage.RANDOMIZED)


def expand_to_latin(A_star: OrthogonalArray, seed: SeedSpec) -> OrthogonalArray:
    """Refine each symbol ``k`` into a random arrangement of ``k*q .. k*q + q - 1``."""
    if A_star.stage is not Stage.RANDOMIZED:
        raise WrongStage(f"expected RANDOMIZED array, got {A_star.stage.value}")
    if A_star.t != 2:
        raise WrongStrength(f"expansion is defined for t=2, got t={A_star.t}")
    ranks = within_symbol_ranks(A_star.entries)
    out = batch_expand(
        A_star.entries[None], ranks, A_star.q, seed.master_seed, [seed.replicate], seed.extra
    )
    return OrthogonalArray(out[0], q=A_star.q, t=A_star.t, stage=Stage.EXPANDED)


def tang_randomize(A_dd: OrthogonalArray, seed: SeedSpec) -> OrthogonalArray:
    """Re-draw the within-symbol level arrangement of every column."""
    if A_dd.stage is not Stage.EXPANDED:
        raise WrongStage(f"expected EXPANDED array, got {A_dd.stage.value}")
    out = batch_tang(A_dd.entries[None], A_dd.q, seed.master_seed, [seed.replicate], seed.extra)
    return OrthogonalArray(out[0], q=A_dd.q, t=A_dd.t, stage=Stage.TANG)
