import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oasampling.errors import (
    DimensionTooLarge,
    DimensionTooSmall,
    NonPrimeQ,
    StrengthExceedsDimension,
)
from oasampling.gf_oa import (
    OrthogonalArray,
    Stage,
    construct_bose_oa,
    format_oa,
    is_prime,
    parse_oa,
    read_oa,
    verify_strength,
    write_oa,
)

from conftest import PRIMES, brute_force_strength


def test_q2_d3_rows():
    A = construct_bose_oa(2, 3)
    assert (A.n, A.d, A.q, A.t, A.stage) == (4, 3, 2, 2, Stage.BASE)
    rows = sorted(map(tuple, A.entries.tolist()))
    assert rows == [(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0)]


def test_q3_d4_pairs_by_counting():
    A = construct_bose_oa(3, 4)
    assert A.entries.shape == (9, 4)
    assert brute_force_strength(A.entries.tolist(), 3, 2)


@pytest.mark.parametrize("q", [4, 6, 9, 1, 0])
def test_non_prime_rejected(q):
    with pytest.raises(NonPrimeQ):
        construct_bose_oa(q, 3)


def test_dimension_bounds():
    with pytest.raises(DimensionTooLarge):
        construct_bose_oa(3, 5)
    with pytest.raises(DimensionTooSmall):
        construct_bose_oa(3, 1)


def test_is_prime_small():
    assert [p for p in range(30) if is_prime(p)] == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]


@pytest.mark.parametrize("q", PRIMES)
def test_bose_exhaustive(q):
    for d in range(2, q + 2):
        A = construct_bose_oa(q, d)
        assert verify_strength(A, 2)
        assert brute_force_strength(A.entries.tolist(), q, 2)


def test_verify_detects_flip():
    A = construct_bose_oa(2, 3)
    E = A.entries.copy()
    E[0, 0] = 1 - E[0, 0]
    bad = OrthogonalArray(E, q=2, t=2)
    assert not verify_strength(bad, 2)
    assert not brute_force_strength(E.tolist(), 2, 2)


def test_strength_one_implied():
    A = construct_bose_oa(2, 3)
    assert verify_strength(A, 1)
    for j in range(3):
        assert np.bincount(A.entries[:, j]).tolist() == [2, 2]


def test_strength_exceeds_dimension():
    with pytest.raises(StrengthExceedsDimension):
        verify_strength(construct_bose_oa(3, 3), 4)


def test_strength_three_fails_for_bose():
    # q^3 does not divide q^2
    assert not verify_strength(construct_bose_oa(3, 4), 3)


@pytest.mark.parametrize("q", [2, 3, 5, 7])
def test_column_deletion_keeps_strength(q):
    A = construct_bose_oa(q, q + 1)
    for j in range(A.d):
        sub = OrthogonalArray(np.delete(A.entries, j, axis=1), q=q, t=2)
        assert verify_strength(sub, 2)


@given(st.sampled_from(PRIMES), st.data())
def test_construction_is_pure(q, data):
    d = data.draw(st.integers(2, q + 1))
    a, b = construct_bose_oa(q, d), construct_bose_oa(q, d)
    assert a.entries.tobytes() == b.entries.tobytes()
    assert a == b


@settings(max_examples=30)
@given(st.sampled_from(PRIMES), st.data())
def test_text_round_trip(q, data):
    d = data.draw(st.integers(2, q + 1))
    A = construct_bose_oa(q, d)
    text = format_oa(A)
    assert text.splitlines()[0] == f"oa {q * q} {d} {q} 2 BASE"
    B = parse_oa(text)
    assert B == A
    assert format_oa(B) == text


def test_file_round_trip(tmp_path):
    A = construct_bose_oa(5, 6)
    path = tmp_path / "a.oa"
    write_oa(A, path)
    assert read_oa(path) == A
    assert path.read_text() == format_oa(A)


def test_entries_are_immutable():
    A = construct_bose_oa(3, 3)
    with pytest.raises(ValueError):
        A.entries[0, 0] = 1


def test_out_of_range_symbols_rejected():
    with pytest.raises(ValueError):
        OrthogonalArray(np.array([[0, 3]]), q=3, t=1)
    # expanded stages allow q^2 symbols
    OrthogonalArray(np.array([[0, 8]]), q=3, t=2, stage=Stage.EXPANDED)
