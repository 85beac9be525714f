"""Matrix permanents.

permanent_ryser is the production path (Gray-code Ryser, O(2^n n)).
permanent_naive expands all n! permutation products and exists purely as a
cross-check oracle for small n; the two share no code.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from . import _kernels

_RYSER_MAX = 30
_NAIVE_MAX = 8


def _checked_square(a, nmax: int) -> np.ndarray:
    mat = np.asarray(a)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"permanent needs a square matrix, got shape {mat.shape}")
    n = mat.shape[0]
    if n == 0:
        raise ValueError("permanent of an empty matrix is not defined here")
    if n > nmax:
        raise ValueError(f"matrix order {n} exceeds the supported limit {nmax}")
    if not np.all(np.isfinite(mat)):
        raise ValueError("matrix contains non-finite entries")
    return mat


def permanent_ryser(a) -> complex | float:
    """Permanent via Ryser's formula with Gray-code subset updates.

    Accepts real or complex square matrices up to order 30 (the loop count
    doubles per row; anything larger is a caller bug, not a workload).
    """
    mat = _checked_square(a, _RYSER_MAX)
    if np.iscomplexobj(mat):
        return complex(_kernels.ryser_cplx(np.ascontiguousarray(mat, dtype=np.complex128)))
    return float(_kernels.ryser_real(np.ascontiguousarray(mat, dtype=np.float64)))


def permanent_naive(a) -> complex | float:
    """Permanent by summing all n! permutation products.

    Exponentially slower than Ryser and capped at n = 8; kept as an
    independent oracle.
    """
    mat = _checked_square(a, _NAIVE_MAX)
    n = mat.shape[0]
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.intp)
    assert perms.shape[0] == math.factorial(n)
    # rows fixed 0..n-1, columns permuted
    prods = mat[np.arange(n)[None, :], perms].prod(axis=1)
    total = prods.sum()
    if np.iscomplexobj(mat):
        return complex(total)
    return float(total)
