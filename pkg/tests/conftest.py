"""Shared fixtures: hand-built tangles and independent oracles.

The reference tangle is small enough to check weights by hand; the walk
tangle has three tips reachable with distinct probabilities so empirical
walk distributions can be compared against exact dynamic programming.
"""
from __future__ import annotations

import numpy as np
import pytest

from tanglesim.core import GENESIS, TangleState, new_tangle
from tanglesim.tsa import transition_probabilities

# parents per id; ids are attach order, genesis = 0
REFERENCE_PARENTS = {
    1: (0, 0), 2: (0, 0), 3: (1, 2), 4: (1, 2), 5: (2, 4),
    6: (1, 3), 7: (3, 4), 8: (5, 6), 9: (6, 7), 10: (7, 9),
    11: (8, 9), 12: (10, 11), 13: (8, 10), 14: (9, 10),
}

WALK_PARENTS = {
    1: (0, 0), 2: (0, 0), 3: (1, 2), 4: (1, 2), 5: (2, 2),
    6: (3, 4), 7: (4, 4), 8: (6, 6), 9: (7, 7),
}


def build_tangle(parents: dict[int, tuple[int, ...]]) -> TangleState:
    t = new_tangle()
    for tx in sorted(parents):
        got = t.attach(parents[tx], issue_time=float(tx))
        assert got == tx
    return t


@pytest.fixture
def reference_tangle() -> TangleState:
    return build_tangle(REFERENCE_PARENTS)


@pytest.fixture
def walk_tangle() -> TangleState:
    return build_tangle(WALK_PARENTS)


def brute_cumulative_weights(tangle: TangleState) -> np.ndarray:
    """Independent oracle: 1 + count of transactions whose ancestor set
    holds x, via per-node ancestor sets built in id order."""
    n = tangle.n
    anc: list[set[int]] = [set() for _ in range(n)]
    for x in range(n):
        s = {x}
        for p in tangle.parents_of(x):
            s |= anc[p]
        anc[x] = s
    cw = np.zeros(n, dtype=np.int64)
    for x in range(n):
        for a in anc[x]:
            cw[a] += 1
    return cw


def exact_tip_distribution(view, alpha: float) -> dict[int, float]:
    """Absorption probabilities of a walk from genesis, by forward DP.

    Ids ascend topologically, so pushing mass in id order reaches every
    transaction after all of its approvees.
    """
    mass = np.zeros(view.n, dtype=np.float64)
    mass[GENESIS] = 1.0
    out: dict[int, float] = {}
    for x in range(view.n):
        if mass[x] == 0.0:
            continue
        if view.is_tip[x]:
            out[x] = out.get(x, 0.0) + float(mass[x])
            continue
        children, probs = transition_probabilities(view, x, alpha)
        for y, p in zip(children, probs):
            mass[y] += mass[x] * p
    return out


def random_tangle(rng: np.random.Generator, n: int,
                  third_parent_rate: float = 0.0) -> TangleState:
    """Random DAG: each id picks two (sometimes three) uniform parents."""
    t = new_tangle()
    for k in range(1, n):
        ps = [int(rng.integers(k)), int(rng.integers(k))]
        if third_parent_rate and rng.random() < third_parent_rate:
            ps.append(int(rng.integers(k)))
        t.attach(ps, issue_time=0.1 * k, visible_time=0.1 * k + 1.0)
    return t
