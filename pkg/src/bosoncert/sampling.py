"""Finite samples from outcome distributions.

A sample set stores distinct state ranks with their multiplicities; raw draw
order carries no information for any downstream statistic, so it is dropped
at construction.  All draws take an explicit numpy Generator, normally one
derived by seeds.stream from a (master_seed, run_index, role) triple.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from weakref import WeakKeyDictionary

import numpy as np
from numba import njit

from . import _kernels, fock
from .distributions import OutcomeDistribution
from .fock import ProblemShape
from .interferometer import Interferometer
from .seeds import stream  # noqa: F401  (re-exported: samplers and streams travel together)

# alias/cumsum tables are pure functions of the table, keep them across draws
_alias_cache: WeakKeyDictionary = WeakKeyDictionary()
_cumsum_cache: WeakKeyDictionary = WeakKeyDictionary()

# table scans beat alias setup while the draw count is small next to dim
ALIAS_DRAW_FRACTION = 10


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Multiset of observed states: sorted distinct ranks and counts."""

    shape: ProblemShape
    ranks: np.ndarray  # int64, strictly increasing
    counts: np.ndarray  # int64, positive
    provenance: str
    seed: str

    def __post_init__(self):
        r = np.ascontiguousarray(self.ranks, dtype=np.int64)
        c = np.ascontiguousarray(self.counts, dtype=np.int64)
        if r.ndim != 1 or r.shape != c.shape:
            raise ValueError("ranks and counts must be matching 1-d arrays")
        if r.size == 0:
            raise ValueError("empty sample")
        if np.any(np.diff(r) <= 0):
            raise ValueError("ranks must be strictly increasing")
        if r[0] < 0 or r[-1] >= self.shape.dim:
            raise ValueError(f"ranks outside [0, {self.shape.dim})")
        if np.any(c <= 0):
            raise ValueError("counts must be positive")
        object.__setattr__(self, "ranks", r)
        object.__setattr__(self, "counts", c)

    @property
    def n_m(self) -> int:
        return int(self.counts.sum())

    def states(self) -> np.ndarray:
        """Occupation vectors of the distinct observed states, (k, m)."""
        return _kernels.unrank_batch(
            self.ranks, self.shape.m, self.shape.n, fock.binomial_table(self.shape.m, self.shape.n)
        )


def from_rank_draws(shape: ProblemShape, draws: np.ndarray, provenance: str, seed: str) -> SampleSet:
    ranks, counts = np.unique(np.asarray(draws, dtype=np.int64), return_counts=True)
    return SampleSet(shape=shape, ranks=ranks, counts=counts, provenance=provenance, seed=seed)


@njit(cache=True)
def _alias_setup(p):
    # Vose's method; entries with p == 0 simply never win the coin toss
    d = p.size
    prob = np.empty(d, dtype=np.float64)
    alias = np.zeros(d, dtype=np.int64)
    scaled = p * d
    small = np.empty(d, dtype=np.int64)
    large = np.empty(d, dtype=np.int64)
    ns = nl = 0
    for i in range(d):
        if scaled[i] < 1.0:
            small[ns] = i
            ns += 1
        else:
            large[nl] = i
            nl += 1
    while ns > 0 and nl > 0:
        ns -= 1
        s = small[ns]
        nl -= 1
        g = large[nl]
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] = (scaled[g] + scaled[s]) - 1.0
        if scaled[g] < 1.0:
            small[ns] = g
            ns += 1
        else:
            large[nl] = g
            nl += 1
    while nl > 0:
        nl -= 1
        prob[large[nl]] = 1.0
    while ns > 0:
        ns -= 1
        prob[small[ns]] = 1.0
    return prob, alias


def draw_from_table(
    dist: OutcomeDistribution,
    n_m: int,
    rng: np.random.Generator,
    seed_label: str = "",
    alias: bool | None = None,
) -> SampleSet:
    """n_m independent draws from a dense table.

    Cumulative binary search by default; for draw counts above dim/10 a Vose
    alias table wins and is used instead.  The two paths give identically
    distributed (not bitwise identical) samples.
    """
    if n_m < 1:
        raise ValueError(f"need at least one draw, got n_m={n_m}")
    d = dist.shape.dim
    if alias is None:
        alias = n_m > d // ALIAS_DRAW_FRACTION
    if alias:
        cached = _alias_cache.get(dist)
        if cached is None:
            cached = _alias_setup(dist.probs)
            _alias_cache[dist] = cached
        prob, alias_idx = cached
        k = rng.integers(0, d, size=n_m)
        coin = rng.random(n_m)
        draws = np.where(coin < prob[k], k, alias_idx[k])
    else:
        cum = _cumsum_cache.get(dist)
        if cum is None:
            cum = np.cumsum(dist.probs)
            _cumsum_cache[dist] = cum
        draws = np.searchsorted(cum, rng.random(n_m), side="right")
        np.minimum(draws, d - 1, out=draws)
    return from_rank_draws(dist.shape, draws, dist.provenance, seed_label)


def draw_distinguishable_direct(
    interf: Interferometer,
    input_state,
    n_m: int,
    rng: np.random.Generator,
    seed_label: str = "",
) -> SampleSet:
    """Sample distinguishable particles one at a time, no table needed.

    Each input particle lands in mode j with probability |U_ji|^2
    independently of the others; the occupations are then ranked.
    """
    if n_m < 1:
        raise ValueError(f"need at least one draw, got n_m={n_m}")
    s = fock.check_state(input_state, m=interf.m)
    if np.any(s > 1):
        raise ValueError("distinguishable sampling needs a single-occupancy input state")
    n = int(s.sum())
    shape = ProblemShape.create(interf.m, n)
    provenance = f"distinguishable-direct({interf.provenance}, input={s.tolist()})"
    if n == 0:
        return SampleSet(shape, np.zeros(1, np.int64), np.array([n_m]), provenance, seed_label)
    occ = np.zeros((n_m, interf.m), dtype=np.int64)
    rows = np.arange(n_m)
    for mode in np.flatnonzero(s):
        col = np.abs(interf.u[:, mode]) ** 2
        landing = np.searchsorted(np.cumsum(col), rng.random(n_m), side="right")
        np.minimum(landing, interf.m - 1, out=landing)
        occ[rows, landing] += 1
    draws = _kernels.rank_batch(occ, fock.binomial_table(shape.m, n))
    return from_rank_draws(shape, draws, provenance, seed_label)


def draw_uniform(
    shape: ProblemShape, n_m: int, rng: np.random.Generator, seed_label: str = ""
) -> SampleSet:
    """n_m uniform ranks; unbiased bounded integers, no table materialised."""
    if n_m < 1:
        raise ValueError(f"need at least one draw, got n_m={n_m}")
    draws = rng.integers(0, shape.dim, size=n_m)
    return from_rank_draws(shape, draws, f"uniform(m={shape.m}, n={shape.n})", seed_label)


def save_sample(path, sample: SampleSet) -> None:
    """rank,count CSV plus a <path>.json sidecar with the metadata."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "count"])
        for r, c in zip(sample.ranks.tolist(), sample.counts.tolist()):
            writer.writerow([r, c])
    meta = {
        "m": sample.shape.m,
        "n": sample.shape.n,
        "n_m": sample.n_m,
        "seed": sample.seed,
        "provenance": sample.provenance,
    }
    with open(path.with_name(path.name + ".json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, sort_keys=True)
        fh.write("\n")


def load_sample(path) -> SampleSet:
    path = Path(path)
    sidecar = path.with_name(path.name + ".json")
    try:
        with open(sidecar, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
        shape = ProblemShape.create(int(meta["m"]), int(meta["n"]))
        declared = int(meta["n_m"])
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"bad or missing sample sidecar {sidecar}: {exc}") from None
    ranks, counts = [], []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["rank", "count"]:
            raise ValueError(f"{path}: expected 'rank,count' header, got {header}")
        for row in reader:
            if len(row) != 2:
                raise ValueError(f"{path}: malformed row {row}")
            ranks.append(int(row[0]))
            counts.append(int(row[1]))
    sample = SampleSet(
        shape=shape,
        ranks=np.asarray(ranks, dtype=np.int64),
        counts=np.asarray(counts, dtype=np.int64),
        provenance=str(meta["provenance"]),
        seed=str(meta["seed"]),
    )
    if sample.n_m != declared:
        raise ValueError(f"{path}: counts sum to {sample.n_m}, sidecar says {declared}")
    return sample
