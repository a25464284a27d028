"""Walks, strategy draws, and the three selector families."""
from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tanglesim.core import GENESIS
from tanglesim.errors import (ConfigInvalid, ConflictRetriesExhausted,
                              NoChildren)
from tanglesim.streams import substream
from tanglesim.tsa import (EIotaParams, EIotaSelector, GIotaSelector,
                           IotaSelector, WalkerConfig, draw_strategy,
                           left_behind_tips, make_selector, random_walk,
                           transition_probabilities, walk_step, walk_trace)

from conftest import exact_tip_distribution, random_tangle


# -- transition law ---------------------------------------------------------------


def test_transition_probabilities_uniform_at_alpha_zero(reference_tangle):
    v = reference_tangle.full_view()
    children, probs = transition_probabilities(v, GENESIS, 0.0)
    assert sorted(children) == [1, 2]
    assert np.allclose(probs, 0.5)


def test_transition_probabilities_softmax(reference_tangle):
    v = reference_tangle.full_view()
    children, probs = transition_probabilities(v, 1, 1.0)
    w = np.exp([float(v.cw[y]) for y in children])
    assert np.allclose(probs, w / w.sum())
    assert math.isclose(float(probs.sum()), 1.0)
    with pytest.raises(NoChildren):
        transition_probabilities(v, 12, 1.0)


def test_walk_step_matches_transition_probabilities(reference_tangle):
    # inverse-CDF over the same child order: a u grid lands on the same
    # picks the python-side CDF predicts (skip points too close to a cut)
    v = reference_tangle.full_view()
    for node, alpha in ((0, 0.0), (1, 5.0), (2, 1.0)):
        children, probs = transition_probabilities(v, node, alpha)
        cdf = np.cumsum(probs)
        for u in np.linspace(0.0005, 0.9995, 41):
            if float(np.min(np.abs(cdf - u))) < 1e-9:
                continue
            expect = children[int(np.searchsorted(cdf, u, side="right"))]
            assert walk_step(v, node, alpha, float(u)) == expect
    with pytest.raises(NoChildren):
        walk_step(v, 12, 5.0, 0.5)


def test_equal_weights_walk_uniformly():
    rng = np.random.default_rng(7)
    t = random_tangle(rng, 30)
    v = t.full_view()
    v2 = replace(v, cw=np.ones(t.n, dtype=np.int64))
    for x in range(t.n):
        if v.head[x] < 0:
            continue
        children, p_alpha = transition_probabilities(v2, x, 5.0)
        assert np.allclose(p_alpha, 1.0 / len(children))


# -- walks -----------------------------------------------------------------------


def test_random_walk_reaches_a_tip(walk_tangle):
    v = walk_tangle.full_view()
    rng = substream(1, 9)
    for _ in range(50):
        res, path = random_walk(v, GENESIS, 5.0, rng, record_path=True)
        assert res.tip in walk_tangle.tips
        assert path[0] == GENESIS and path[-1] == res.tip
        assert res.steps == len(path) - 1
        assert res.weighted


def test_walk_from_tip_consumes_no_randomness(walk_tangle):
    v = walk_tangle.full_view()
    rng = substream(3, 4)
    before = rng.bit_generator.state
    res, _ = random_walk(v, 9, 5.0, rng)
    assert res.tip == 9 and res.steps == 0
    assert rng.bit_generator.state == before
    assert res.weighted  # policy flag, not step count


def test_walk_weighted_flag_tracks_alpha(walk_tangle):
    v = walk_tangle.full_view()
    res0, _ = random_walk(v, GENESIS, 0.0, substream(0, 1))
    res5, _ = random_walk(v, GENESIS, 5.0, substream(0, 1))
    assert not res0.weighted
    assert res5.weighted


@pytest.mark.parametrize("alpha", [0.0, 1.0, 5.0])
def test_walk_distribution_matches_exact_dp(walk_tangle, alpha):
    v = walk_tangle.full_view()
    exact = exact_tip_distribution(v, alpha)
    assert math.isclose(sum(exact.values()), 1.0)
    trials = 20000
    rng = substream(5, 0)
    counts: dict[int, int] = {}
    for _ in range(trials):
        res, _ = random_walk(v, GENESIS, alpha, rng)
        counts[res.tip] = counts.get(res.tip, 0) + 1
    assert set(counts) <= set(exact)
    for tip, p in exact.items():
        sigma = math.sqrt(trials * p * (1.0 - p))
        assert abs(counts.get(tip, 0) - trials * p) <= 4.0 * sigma + 1.0, tip


def test_walker_config_validation():
    WalkerConfig().validate()
    with pytest.raises(ConfigInvalid):
        WalkerConfig(alpha=-1.0).validate()
    with pytest.raises(ConfigInvalid):
        WalkerConfig(n_walkers=0).validate()


def test_walk_trace_records_path(walk_tangle):
    v = walk_tangle.full_view()
    tr = walk_trace(v, WalkerConfig(alpha=5.0), substream(2, 0))
    assert tr.path[0] == GENESIS
    assert tr.tip == tr.path[-1]
    assert tr.tip in walk_tangle.tips
    assert tr.weighted_computation
    assert tr.strategy.alpha == 5.0


def test_walk_trace_shortest_path_wins(walk_tangle):
    # tip 5 sits two hops from genesis, tips 8/9 four hops: with many
    # walkers the shortest recorded path must never lose to a longer one
    v = walk_tangle.full_view()
    tr = walk_trace(v, WalkerConfig(alpha=0.0, n_walkers=64), substream(11, 3))
    assert tr.tip == 5
    assert len(tr.path) == 3


# -- strategy draws -----------------------------------------------------------------


def test_draw_strategy_bands():
    params = EIotaParams(p1=0.25, p2=0.5, alpha_low=(0.5, 1.5), alpha_high=4.0)

    class Fixed:
        def __init__(self, values):
            self.values = list(values)

        def random(self):
            return self.values.pop(0)

    s = draw_strategy(params, Fixed([0.1]))
    assert (s.kind, s.alpha) == ("uniform", 0.0)
    s = draw_strategy(params, Fixed([0.3, 0.5]))
    assert s.kind == "low" and s.alpha == 1.0
    s = draw_strategy(params, Fixed([0.9]))
    assert s.kind == "high" and s.alpha == 4.0


def test_draw_strategy_frequencies():
    params = EIotaParams()
    rng = substream(4, 2)
    n = 30000
    counts = {"uniform": 0, "low": 0, "high": 0}
    for _ in range(n):
        s = draw_strategy(params, rng)
        counts[s.kind] += 1
        if s.kind == "low":
            lo, hi = params.alpha_low
            assert lo <= s.alpha <= hi
    for kind, p in zip(("uniform", "low", "high"),
                       params.class_probabilities):
        sigma = math.sqrt(n * p * (1 - p))
        assert abs(counts[kind] - n * p) <= 4 * sigma


def test_eiota_params_validation():
    EIotaParams().validate()
    EIotaParams(p1=0.98, p2=0.99).validate()  # extreme but well-formed
    with pytest.raises(ConfigInvalid):
        EIotaParams(p1=0.98).validate()  # p1 >= default p2
    with pytest.raises(ConfigInvalid):
        EIotaParams(p1=0.0).validate()
    with pytest.raises(ConfigInvalid):
        EIotaParams(p2=1.0).validate()
    with pytest.raises(ConfigInvalid):
        EIotaParams(alpha_low=(0.0, 2.0)).validate()
    with pytest.raises(ConfigInvalid):
        EIotaParams(alpha_low=(2.0, 0.5)).validate()
    with pytest.raises(ConfigInvalid):
        EIotaParams(alpha_low=(0.1, 6.0)).validate()  # reaches past high


# -- selectors ----------------------------------------------------------------------


def test_iota_selector_accounting(walk_tangle):
    v = walk_tangle.full_view()
    sel = IotaSelector(alpha=5.0).select(v, substream(1, 0))
    assert len(sel.parents) == 2
    assert all(p in walk_tangle.tips for p in sel.parents)
    assert sel.walks == 2
    assert sel.compute_walks == 2
    assert sel.strategy is None
    assert sel.retries == 0 and not sel.fallback and sel.third == -1
    with pytest.raises(ConfigInvalid):
        IotaSelector(alpha=-0.5)


def test_giota_rescues_an_old_tip(walk_tangle):
    # issue times equal ids, so at now=30 the tip ages are 25 (tip 5),
    # 22 (tip 8), 21 (tip 9): threshold 23 leaves exactly tip 5 eligible
    v = walk_tangle.full_view()
    v.now = 30.0
    pool = left_behind_tips(v, 23.0)
    assert list(pool) == [5]
    hits = 0
    for k in range(40):
        sel = GIotaSelector(alpha=5.0, age_threshold=23.0).select(
            v, substream(k, 1))
        if sel.third >= 0:
            hits += 1
            assert sel.third == 5
            assert sel.parents[2] == 5
            assert sel.walks == 2  # the rescue draw is not a walk
    assert hits > 0


def test_giota_drops_rescue_when_pool_empty(walk_tangle):
    v = walk_tangle.full_view()
    v.now = 30.0
    sel = GIotaSelector(alpha=5.0, age_threshold=100.0).select(
        v, substream(0, 1))
    assert sel.third == -1
    assert len(sel.parents) == 2
    with pytest.raises(ConfigInvalid):
        GIotaSelector(age_threshold=0.0)


def test_eiota_one_strategy_draw_shared_by_both_walks(walk_tangle):
    v = walk_tangle.full_view()
    sel_obj = EIotaSelector(EIotaParams())
    kinds = set()
    for k in range(60):
        sel = sel_obj.select(v, substream(k, 2))
        assert sel.strategy is not None
        kinds.add(sel.strategy.kind)
        assert len(set(sel.alphas)) == 1  # both walks inherit the one draw
        assert sel.alphas[0] == sel.strategy.alpha
        if sel.strategy.kind == "uniform":
            assert sel.compute_walks == 0
        else:
            assert sel.compute_walks == sel.walks
    assert kinds == {"uniform", "low", "high"}


def test_conflict_retry_and_fallback(walk_tangle):
    v = walk_tangle.full_view()

    def always(t1, t2, third):
        return True

    with pytest.raises(ConflictRetriesExhausted):
        IotaSelector(alpha=5.0, retry_budget=3).select(v, substream(0, 3), always)

    def distinct_pair_conflicts(t1, t2, third):
        return t1 != t2

    sel = IotaSelector(alpha=0.0, retry_budget=4).select(
        v, substream(1, 3), distinct_pair_conflicts)
    if sel.fallback:
        assert sel.parents[0] == sel.parents[1]
        assert sel.retries == 4
        assert sel.walks == 1  # only the kept slot is accounted
    else:
        assert sel.parents[0] == sel.parents[1]  # pair passed by landing equal


def test_retry_counts_accepted_attempt_only(walk_tangle):
    v = walk_tangle.full_view()
    state = {"calls": 0}

    def first_two_attempts_fail(t1, t2, third):
        state["calls"] += 1
        return state["calls"] <= 2

    sel = IotaSelector(alpha=5.0, retry_budget=10).select(
        v, substream(2, 3), first_two_attempts_fail)
    assert sel.retries == 2
    assert not sel.fallback
    assert sel.walks == 2


def test_giota_rescue_respects_conflict_check(walk_tangle):
    v = walk_tangle.full_view()
    v.now = 30.0

    def no_third(t1, t2, third):
        return third >= 0

    sel = GIotaSelector(alpha=5.0, age_threshold=23.0).select(
        v, substream(3, 1), no_third)
    assert sel.third == -1


def test_make_selector():
    assert make_selector("iota", alpha=2.0).alpha == 2.0
    assert make_selector("giota", age_threshold=4.0).age_threshold == 4.0
    assert make_selector("eiota", p1=0.2, p2=0.4).params.p1 == 0.2
    with pytest.raises(ConfigInvalid):
        make_selector("urts")


# -- properties ----------------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 50),
       st.sampled_from([0.0, 0.7, 5.0]))
def test_walks_always_terminate_on_tips(seed, n, alpha):
    rng = np.random.default_rng(seed)
    t = random_tangle(rng, n)
    v = t.full_view()
    res, _ = random_walk(v, GENESIS, alpha, substream(seed, 8))
    assert res.tip in t.tips


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 50),
       st.sampled_from([0.0, 1.0, 5.0]))
def test_transition_probabilities_normalized(seed, n, alpha):
    rng = np.random.default_rng(seed)
    t = random_tangle(rng, n)
    v = t.full_view()
    for x in range(t.n):
        if v.head[x] < 0:
            continue
        children, probs = transition_probabilities(v, x, alpha)
        assert len(children) == len(probs)
        assert math.isclose(float(probs.sum()), 1.0, rel_tol=1e-9)
        assert (probs >= 0).all()
