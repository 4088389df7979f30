"""Counter-based seed splitting.

Every random stream in an experiment is keyed by ``(master_seed, *counters)``
through :class:`numpy.random.SeedSequence` spawn keys, e.g. ``(point, instance,
purpose)``.  Any single instance can be regenerated without replaying the
ones before it.
"""
from __future__ import annotations

import numpy as np

# purpose tags for the last counter
GRAPH, COLORING, SP, ORDER, PICK, SEARCH = range(6)


def derive_seed(master: int, *counters: int) -> int:
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(c) for c in counters))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def derive_rng(master: int, *counters: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(c) for c in counters))
    return np.random.default_rng(ss)
