"""Keyed random substreams.

Every random decision in a run is drawn from a generator derived from
(master seed, domain, *key), so results do not depend on scheduling or on
worker counts: any component can recreate exactly the stream it needs.
"""
from __future__ import annotations

import numpy as np

# Domain codes (first spawn_key entry).
DOMAIN_ARRIVALS = 0
DOMAIN_ISSUE = 1  # per honest issuance: strategy draw, walks, retries, third tip
DOMAIN_ADVERSARY = 2
DOMAIN_CONFIDENCE = 3  # per-transaction estimates, keyed (tx, draw)
DOMAIN_CONFIDENCE_SHARED = 4  # common-random-number profile, keyed (draw,)
DOMAIN_SAMPLE = 5  # uniform transaction sampling for report output


def substream(master_seed: int, *key: int) -> np.random.Generator:
    """Generator for the given (master seed, key...) coordinate."""
    if master_seed < 0:
        raise ValueError("master seed must be non-negative")
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
