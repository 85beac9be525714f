"""Exact outcome distributions over the full state space.

For an interferometer U and input occupation s, the quantum outcome law is

    P(t) = |perm(U[rows(t), cols(s)])|^2 / (prod_i s_i! prod_j t_j!)

with cols(s) repeating input mode j s_j times and rows(t) repeating output
mode i t_i times.  Distinguishable particles follow the same shape with the
permanent of the transition-probability matrix |U|^2 (single-occupancy input
only), and the uniform law is 1/dim everywhere.

Tables are dense float64 vectors indexed by canonical rank.  Every entry is a
pure function of its rank, so sweeps parallelise freely and results do not
depend on chunking.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels, fock
from .fock import ProblemShape
from .interferometer import Interferometer

_NORM_TOL = 1e-9
_FORMAT_MAGIC = b"BSD1"


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    """Dense probability table over all occupation states of a shape."""

    shape: ProblemShape
    probs: np.ndarray
    provenance: str

    def __post_init__(self):
        p = np.ascontiguousarray(self.probs, dtype=np.float64)
        if p.shape != (self.shape.dim,):
            raise ValueError(f"table has shape {p.shape}, expected ({self.shape.dim},)")
        if not np.all(np.isfinite(p)):
            raise ValueError("table contains non-finite probabilities")
        if p.min() < -1e-12:
            raise ValueError(f"table contains negative probability {p.min():.3e}")
        p = np.maximum(p, 0.0)
        total = float(p.sum())
        if abs(total - 1.0) > _NORM_TOL:
            raise ValueError(f"table sums to {total!r}, outside 1 +- {_NORM_TOL}")
        object.__setattr__(self, "probs", p)


def _factorials(n: int) -> np.ndarray:
    return np.array([math.factorial(k) for k in range(n + 1)], dtype=np.float64)


def _input_columns(s: np.ndarray) -> np.ndarray:
    return np.repeat(np.arange(s.size, dtype=np.int64), s)


def boson_distribution(interf: Interferometer, input_state) -> OutcomeDistribution:
    """Full quantum outcome table for indistinguishable bosons."""
    s = fock.check_state(input_state, m=interf.m)
    n = int(s.sum())
    shape = ProblemShape.create(interf.m, n)
    provenance = f"boson({interf.provenance}, input={s.tolist()})"
    if n == 0:
        return OutcomeDistribution(shape, np.ones(1), provenance)
    fact = _factorials(n)
    norm_in = float(np.prod(fact[s]))
    out = np.empty(shape.dim, dtype=np.float64)
    _kernels.boson_table(
        interf.u,
        _input_columns(s),
        fact,
        norm_in,
        shape.m,
        n,
        fock.binomial_table(shape.m, n),
        out,
    )
    return OutcomeDistribution(shape, out, provenance)


def distinguishable_distribution(interf: Interferometer, input_state) -> OutcomeDistribution:
    """Outcome table for the same input carried by distinguishable particles.

    Only defined for single-occupancy inputs (each s_i in {0, 1}).
    """
    s = fock.check_state(input_state, m=interf.m)
    if np.any(s > 1):
        raise ValueError("distinguishable law needs a single-occupancy input state")
    n = int(s.sum())
    shape = ProblemShape.create(interf.m, n)
    provenance = f"distinguishable({interf.provenance}, input={s.tolist()})"
    if n == 0:
        return OutcomeDistribution(shape, np.ones(1), provenance)
    fact = _factorials(n)
    aprob = np.ascontiguousarray(np.abs(interf.u) ** 2)
    out = np.empty(shape.dim, dtype=np.float64)
    _kernels.distinguishable_table(
        aprob,
        _input_columns(s),
        fact,
        shape.m,
        n,
        fock.binomial_table(shape.m, n),
        out,
    )
    return OutcomeDistribution(shape, out, provenance)


def uniform_distribution(m: int, n: int) -> OutcomeDistribution:
    """Flat table 1/dim over every state."""
    shape = ProblemShape.create(m, n)
    return OutcomeDistribution(
        shape, np.full(shape.dim, 1.0 / shape.dim), f"uniform(m={m}, n={n})"
    )


def _sparse_view(x):
    """(ranks, frequencies) for sample-like objects, else None."""
    ranks = getattr(x, "ranks", None)
    counts = getattr(x, "counts", None)
    if ranks is None or counts is None:
        return None
    total = float(np.asarray(counts).sum())
    if total <= 0:
        raise ValueError("empty sample has no distribution")
    return np.asarray(ranks), np.asarray(counts, dtype=np.float64) / total


def fidelity(p, q) -> float:
    """Classical (Bhattacharyya) fidelity sum_k sqrt(p_k q_k).

    Accepts exact tables and sample sets in any combination; shapes must
    agree.  1 for identical distributions, 0 for disjoint support.
    """
    sp, sq = getattr(p, "shape", None), getattr(q, "shape", None)
    if isinstance(sp, ProblemShape) and isinstance(sq, ProblemShape) and sp != sq:
        raise ValueError(f"shape mismatch {sp} vs {sq}")
    vp, vq = _sparse_view(p), _sparse_view(q)
    if vp is not None and vq is not None:
        common, ip, iq = np.intersect1d(vp[0], vq[0], return_indices=True)
        if common.size == 0:
            return 0.0
        return float(np.sqrt(vp[1][ip] * vq[1][iq]).sum())
    if vp is not None or vq is not None:
        sparse, dense = (vp, q) if vp is not None else (vq, p)
        dense_probs = dense.probs if isinstance(dense, OutcomeDistribution) else np.asarray(dense)
        return float(np.sqrt(sparse[1] * dense_probs[sparse[0]]).sum())
    pa = p.probs if isinstance(p, OutcomeDistribution) else np.asarray(p, dtype=np.float64)
    qa = q.probs if isinstance(q, OutcomeDistribution) else np.asarray(q, dtype=np.float64)
    if pa.shape != qa.shape:
        raise ValueError(f"shape mismatch {pa.shape} vs {qa.shape}")
    return float(np.sqrt(pa * qa).sum())


def payload_checksum(probs: np.ndarray) -> int:
    """FNV-1a 64 over the raw little-endian bytes of the table."""
    payload = np.ascontiguousarray(probs, dtype="<f8").view(np.uint8)
    return int(_kernels.fnv1a64(payload))


def save_distribution(path, dist: OutcomeDistribution) -> None:
    """Binary table: magic, <u32 m, <u32 n, <u64 dim, dim doubles, <u64 fnv.

    The checksum covers exactly the dim*8 payload bytes of the doubles.
    Provenance is not part of the format; loaders tag tables by file name.
    """
    payload = np.ascontiguousarray(dist.probs, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(_FORMAT_MAGIC)
        fh.write(struct.pack("<IIQ", dist.shape.m, dist.shape.n, dist.shape.dim))
        fh.write(payload)
        fh.write(struct.pack("<Q", payload_checksum(dist.probs)))


def load_distribution(path) -> OutcomeDistribution:
    path = Path(path)
    raw = path.read_bytes()
    head = len(_FORMAT_MAGIC) + struct.calcsize("<IIQ")
    if len(raw) < head + 8 or raw[:4] != _FORMAT_MAGIC:
        raise ValueError(f"{path} is not a distribution table file")
    m, n, dim = struct.unpack("<IIQ", raw[4:head])
    if dim != fock.hilbert_dim(m, n):
        raise ValueError(f"{path}: header dim {dim} does not match shape ({m}, {n})")
    if len(raw) != head + 8 * dim + 8:
        raise ValueError(f"{path}: truncated or padded table (size {len(raw)})")
    probs = np.frombuffer(raw, dtype="<f8", count=dim, offset=head).astype(np.float64)
    (stored,) = struct.unpack("<Q", raw[head + 8 * dim :])
    actual = payload_checksum(probs)
    if stored != actual:
        raise ValueError(f"{path}: checksum mismatch (stored {stored:#x}, payload {actual:#x})")
    return OutcomeDistribution(ProblemShape.create(m, n), probs, f"file({path.name})")
