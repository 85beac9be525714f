"""Bosonic occupation states on a fixed number of modes.

States are occupation vectors ``t`` of length ``m`` with nonnegative entries
summing to ``n``.  The canonical order is colexicographic on the occupation
vector: state ``a`` precedes ``b`` when, at the highest mode index where they
differ, ``a`` holds fewer particles.  Rank 0 is therefore ``(n, 0, ..., 0)``
and the last rank is ``(0, ..., 0, n)``.

Ranks are plain integers in ``[0, hilbert_dim(m, n))``.  Everything here is
exact integer arithmetic; any quantity that would not fit a signed 64-bit
integer raises ``OverflowError`` instead of wrapping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_INT64_MAX = 2**63 - 1


def hilbert_dim(m: int, n: int) -> int:
    """Number of occupation vectors of n bosons on m modes, C(m+n-1, n).

    Raises OverflowError when the count exceeds signed 64-bit range, and
    ValueError for m < 1 or n < 0.
    """
    if m < 1:
        raise ValueError(f"need at least one mode, got m={m}")
    if n < 0:
        raise ValueError(f"negative particle number n={n}")
    d = math.comb(m + n - 1, n)
    if d > _INT64_MAX:
        raise OverflowError(
            f"state space for m={m}, n={n} has {d} states, beyond 64-bit ranks"
        )
    return d


@dataclass(frozen=True)
class ProblemShape:
    """Mode count, particle count and the resulting state-space size."""

    m: int
    n: int
    dim: int

    @classmethod
    def create(cls, m: int, n: int) -> "ProblemShape":
        return cls(m=int(m), n=int(n), dim=hilbert_dim(m, n))


def check_state(occ, m: int | None = None, n: int | None = None) -> np.ndarray:
    """Validate an occupation vector and return it as an int64 array."""
    t = np.asarray(occ)
    if t.ndim != 1 or t.size == 0:
        raise ValueError(f"occupation vector must be 1-d and nonempty, got shape {t.shape}")
    if not np.issubdtype(t.dtype, np.integer):
        if not np.all(t == np.floor(t)):
            raise ValueError("occupation numbers must be integers")
    t = t.astype(np.int64)
    if np.any(t < 0):
        raise ValueError("occupation numbers must be nonnegative")
    if m is not None and t.size != m:
        raise ValueError(f"expected {m} modes, got {t.size}")
    if n is not None and int(t.sum()) != n:
        raise ValueError(f"expected {n} particles, got {int(t.sum())}")
    return t


def rank(occ, m: int | None = None, n: int | None = None) -> int:
    """Colexicographic rank of an occupation vector.

    O(m) exact integer arithmetic.  The inverse is :func:`unrank`.
    """
    t = check_state(occ, m=m, n=n)
    mm = t.size
    remaining = int(t.sum())
    hilbert_dim(mm, remaining)  # overflow / validity guard
    r = 0
    for i in range(mm - 1, 0, -1):
        ti = int(t[i])
        if ti:
            # sum over v < t_i of the count of states with value v at mode i
            r += math.comb(remaining + i, remaining) - math.comb(
                remaining - ti + i, remaining - ti
            )
            remaining -= ti
    return r


def unrank(k: int, m: int, n: int) -> np.ndarray:
    """Occupation vector at rank ``k`` in canonical order."""
    d = hilbert_dim(m, n)
    k = int(k)
    if not 0 <= k < d:
        raise ValueError(f"rank {k} outside [0, {d})")
    t = np.zeros(m, dtype=np.int64)
    remaining = n
    for i in range(m - 1, 0, -1):
        v = 0
        while True:
            block = math.comb(remaining - v + i - 1, remaining - v)
            if k < block:
                break
            k -= block
            v += 1
        t[i] = v
        remaining -= v
    t[0] = remaining
    return t


def binomial_table(m: int, n: int) -> np.ndarray:
    """Dense C(a, b) lookup for the rank arithmetic, as int64.

    Rows a in [0, m+n), columns b in [0, n].  Only entries with
    a - b <= m - 1 are ever read by rank/unrank; those are bounded by
    hilbert_dim(m, n), so the table fits exactly once the dimension does.
    Unused entries stay 0.
    """
    hilbert_dim(m, n)
    tab = np.zeros((m + n, n + 1), dtype=np.int64)
    for b in range(n + 1):
        for a in range(b, min(b + m, m + n)):
            tab[a, b] = math.comb(a, b)
    return tab


def all_states(m: int, n: int) -> np.ndarray:
    """All occupation vectors in canonical order, shape (dim, m).

    Intended for small spaces (tests, exhaustive sweeps); guards against
    accidentally materialising more than ~2e7 states.
    """
    d = hilbert_dim(m, n)
    if d * m > 20_000_000:
        raise ValueError(f"refusing to materialise {d} x {m} state table")
    from . import _kernels

    return _kernels.unrank_batch(
        np.arange(d, dtype=np.int64), m, n, binomial_table(m, n)
    )


def rank_batch(states: np.ndarray) -> np.ndarray:
    """Ranks of a (k, m) array of occupation vectors, via the jit kernel."""
    states = np.ascontiguousarray(np.asarray(states, dtype=np.int64))
    if states.ndim != 2:
        raise ValueError("expected a (k, m) array of occupation vectors")
    m = states.shape[1]
    n = int(states[0].sum()) if states.shape[0] else 0
    from . import _kernels

    return _kernels.rank_batch(states, binomial_table(m, n))


def l1_distance(a, b) -> int:
    """L1 distance between occupation vectors; even for equal particle number."""
    ta = np.asarray(a, dtype=np.int64)
    tb = np.asarray(b, dtype=np.int64)
    if ta.shape != tb.shape:
        raise ValueError(f"shape mismatch {ta.shape} vs {tb.shape}")
    return int(np.abs(ta - tb).sum())
