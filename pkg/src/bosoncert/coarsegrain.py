"""Coarse-graining the exponentially large state space into bubbles.

A bubble is an L1 ball around an observed state.  Construction is greedy on
one sample: the most frequent unassigned state becomes the next center and
swallows every unassigned state within the current radius (inclusive).  The
radius starts small and is bumped whenever the running mean of per-bubble
counts falls behind the total divided by the requested bubble count, so the
realised partition tracks the target size.  Bubbles that end up with fewer
than min_count construction events are folded into their nearest neighbour.

Membership is lazy: a partition stores only centers, radii and the merge
list.  Any state, observed or not, belongs to the first bubble (construction
order) whose radius covers it, else to the bubble with the nearest center,
earliest center on ties.  This makes the partition total and disjoint over
the full space without ever enumerating it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels, fock
from .distributions import OutcomeDistribution
from .fock import ProblemShape
from .sampling import SampleSet

DEFAULT_MIN_COUNT = 10
DEFAULT_RADIUS_START = 2
DEFAULT_RADIUS_STEP = 2


@dataclass(frozen=True, eq=False)
class BubblePartition:
    """Greedy L1-ball partition: centers, radii, merges, build parameters."""

    shape: ProblemShape
    centers: np.ndarray  # (k, m) occupation vectors in construction order
    radii: np.ndarray  # (k,) int64
    merges: tuple  # ((from_bubble, into_bubble), ...) in merge order
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.ascontiguousarray(self.centers, dtype=np.int64)
        r = np.ascontiguousarray(self.radii, dtype=np.int64)
        if c.ndim != 2 or c.shape[1] != self.shape.m or c.shape[0] < 1:
            raise ValueError(f"centers must be (k, {self.shape.m}) with k >= 1")
        if r.shape != (c.shape[0],) or np.any(r < 0):
            raise ValueError("radii must be one nonnegative value per bubble")
        if np.any(c < 0) or np.any(c.sum(axis=1) != self.shape.n):
            raise ValueError("centers must be valid occupation vectors")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "merges", tuple((int(f), int(t)) for f, t in self.merges))
        k = c.shape[0]
        target = np.arange(k, dtype=np.int64)
        for f, t in self.merges:
            if not (0 <= f < k and 0 <= t < k) or f == t:
                raise ValueError(f"bad merge pair ({f}, {t})")
            target[f] = t
        # resolve merge chains to final survivors
        root = target.copy()
        for b in range(k):
            seen = 0
            while root[b] != target[root[b]]:
                root[b] = target[root[b]]
                seen += 1
                if seen > k:
                    raise ValueError("merge list contains a cycle")
        survivors = np.flatnonzero(root == np.arange(k))
        bin_index = np.full(k, -1, dtype=np.int64)
        bin_index[survivors] = np.arange(survivors.size)
        object.__setattr__(self, "_bubble_bin", bin_index[root])
        object.__setattr__(self, "_survivors", survivors)

    @property
    def n_bins(self) -> int:
        return int(self._survivors.size)

    @property
    def n_bubbles(self) -> int:
        return int(self.centers.shape[0])

    def bin_of_bubble(self, bubble: int) -> int:
        return int(self._bubble_bin[bubble])


def build_bubbles(
    sample: SampleSet,
    target_n_b: int,
    min_count: int = DEFAULT_MIN_COUNT,
    radius_start: int = DEFAULT_RADIUS_START,
    radius_step: int = DEFAULT_RADIUS_STEP,
) -> BubblePartition:
    """Grow the bubble partition from one construction sample.

    target_n_b steers (does not pin) the number of bubbles through the
    radius schedule; min_count triggers the final merge pass.  The merge
    pass repeats until every surviving bubble holds at least min_count
    construction events (or a single bubble is left): folding one bubble
    can leave its absorber still short, so a single sweep is not enough.
    """
    if target_n_b < 2:
        raise ValueError(f"target bubble count must be >= 2, got {target_n_b}")
    if min_count < 1 or radius_start < 0 or radius_step < 0:
        raise ValueError("min_count must be >= 1 and radii nonnegative")
    if sample.ranks.size < 2:
        raise ValueError("need at least two distinct observed states to partition")
    order = np.lexsort((sample.ranks, -sample.counts))
    live_states = sample.states()[order]
    live_counts = sample.counts[order]
    radius_cap = 2 * sample.shape.n
    radius = min(radius_start, radius_cap)
    threshold = sample.n_m / target_n_b

    centers, radii, bubble_counts = [], [], []
    assigned = 0
    while live_states.shape[0] > 0:
        center = live_states[0]
        dist = np.abs(live_states - center[None, :]).sum(axis=1)
        inside = dist <= radius
        centers.append(center)
        radii.append(radius)
        got = int(live_counts[inside].sum())
        bubble_counts.append(got)
        assigned += got
        keep = ~inside
        live_states = live_states[keep]
        live_counts = live_counts[keep]
        if assigned / len(centers) < threshold:
            radius = min(radius + radius_step, radius_cap)

    if len(centers) < 2:
        raise ValueError(
            "sample collapsed into a single bubble; cannot honour a bubble target >= 2"
        )

    counts = np.array(bubble_counts, dtype=np.int64)
    alive = np.ones(counts.size, dtype=bool)
    center_arr = np.array(centers, dtype=np.int64)
    merges = []
    while alive.sum() > 1:
        alive_idx = np.flatnonzero(alive)
        starved = alive_idx[counts[alive_idx] < min_count]
        if starved.size == 0:
            break
        b = starved[np.argmin(counts[starved])]  # smallest first, earliest on ties
        others = alive_idx[alive_idx != b]
        dist = np.abs(center_arr[others] - center_arr[b][None, :]).sum(axis=1)
        t = others[np.argmin(dist)]  # nearest center, earliest on ties
        merges.append((int(b), int(t)))
        counts[t] += counts[b]
        alive[b] = False

    return BubblePartition(
        shape=sample.shape,
        centers=center_arr,
        radii=np.array(radii, dtype=np.int64),
        merges=tuple(merges),
        params={
            "target_n_b": int(target_n_b),
            "min_count": int(min_count),
            "radius_start": int(radius_start),
            "radius_step": int(radius_step),
            "radius_cap": int(radius_cap),
        },
    )


def assign_state(partition: BubblePartition, occ) -> int:
    """Bin index of one occupation vector under the lazy membership rule."""
    t = fock.check_state(occ, m=partition.shape.m, n=partition.shape.n)
    label = _kernels.assign_states(t[None, :], partition.centers, partition.radii)[0]
    return partition.bin_of_bubble(int(label))


@dataclass(frozen=True, eq=False)
class CoarseDistribution:
    """Masses per surviving bin; counts for samples, probabilities for tables."""

    partition: BubblePartition
    masses: np.ndarray
    total: float
    provenance: str

    def probabilities(self) -> np.ndarray:
        return self.masses / self.total


def coarse_grain(partition: BubblePartition, source) -> CoarseDistribution:
    """Fold a sample or an exact table onto the partition's bins."""
    if isinstance(source, SampleSet):
        if source.shape != partition.shape:
            raise ValueError(f"shape mismatch {source.shape} vs {partition.shape}")
        labels = _kernels.assign_states(source.states(), partition.centers, partition.radii)
        bins = partition._bubble_bin[labels]
        masses = np.zeros(partition.n_bins, dtype=np.int64)
        np.add.at(masses, bins, source.counts)
        return CoarseDistribution(
            partition=partition,
            masses=masses.astype(np.float64),
            total=float(source.n_m),
            provenance=source.provenance,
        )
    if isinstance(source, OutcomeDistribution):
        if source.shape != partition.shape:
            raise ValueError(f"shape mismatch {source.shape} vs {partition.shape}")
        shape = partition.shape
        labels = _kernels.assign_ranks(
            np.arange(shape.dim, dtype=np.int64),
            shape.m,
            shape.n,
            fock.binomial_table(shape.m, shape.n),
            partition.centers,
            partition.radii,
        )
        bins = partition._bubble_bin[labels]
        masses = np.bincount(bins, weights=source.probs, minlength=partition.n_bins)
        return CoarseDistribution(
            partition=partition,
            masses=masses,
            total=1.0,
            provenance=source.provenance,
        )
    raise TypeError(f"cannot coarse-grain {type(source).__name__}")


def save_partition(path, partition: BubblePartition) -> None:
    payload = {
        "m": partition.shape.m,
        "n": partition.shape.n,
        "bubbles": [
            {"center_rank": int(fock.rank(c)), "radius": int(r)}
            for c, r in zip(partition.centers, partition.radii)
        ],
        "merges": [[f, t] for f, t in partition.merges],
        "params": partition.params,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_partition(path) -> BubblePartition:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    try:
        shape = ProblemShape.create(int(payload["m"]), int(payload["n"]))
        bubbles = payload["bubbles"]
        centers = np.array(
            [fock.unrank(int(b["center_rank"]), shape.m, shape.n) for b in bubbles],
            dtype=np.int64,
        )
        radii = np.array([int(b["radius"]) for b in bubbles], dtype=np.int64)
        merges = tuple((int(f), int(t)) for f, t in payload["merges"])
        params = dict(payload.get("params", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed partition file {path}: {exc}") from None
    return BubblePartition(shape=shape, centers=centers, radii=radii, merges=merges, params=params)
