import itertools
from collections import Counter

import pytest

PRIMES = (2, 3, 5, 7, 11, 13)


def brute_force_strength(rows, q, t):
    """Independent counting oracle over python tuples."""
    n = len(rows)
    d = len(rows[0])
    if n % q**t:
        return False
    want = n // q**t
    for cols in itertools.combinations(range(d), t):
        counts = Counter(tuple(r[c] for c in cols) for r in rows)
        if len(counts) != q**t or any(v != want for v in counts.values()):
            return False
    return True


@pytest.fixture
def oracle_strength():
    return brute_force_strength
