"""Deterministic random streams keyed by (master seed, run index, role).

Philox is counter based with published constants, so every worker can derive
its own stream without coordination and results do not depend on scheduling.
The role tag is folded to an integer with FNV-1a 64 before entering the seed
sequence, keeping the whole derivation a pure function of the key triple.
"""

from __future__ import annotations

import numpy as np

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def stream(master_seed: int, run_index: int = 0, role: str = "") -> np.random.Generator:
    """Independent generator for one (master_seed, run_index, role) triple."""
    master_seed = int(master_seed)
    run_index = int(run_index)
    if master_seed < 0:
        raise ValueError(f"master seed must be nonnegative, got {master_seed}")
    if run_index < 0:
        raise ValueError(f"run index must be nonnegative, got {run_index}")
    key = fnv1a64(role.encode("utf-8"))
    ss = np.random.SeedSequence(entropy=[master_seed, run_index, key])
    return np.random.Generator(np.random.Philox(ss))
