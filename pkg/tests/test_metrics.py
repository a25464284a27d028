"""Confidence estimators and the metrics report."""
from __future__ import annotations

import math

import numpy as np
import pytest

from tanglesim.core import GENESIS
from tanglesim.engine import ScenarioConfig, run
from tanglesim.errors import UnknownTransaction
from tanglesim.metrics import (METRICS_HEADER, MetricsReport, conf95_count,
                               confidence_profile, estimate_confidence,
                               finalize_report, sample_ids, single_tip,
                               write_confidence_csv, write_metrics_csv)
from tanglesim.streams import substream
from tanglesim.tsa import (EIotaParams, EIotaSelector, IotaSelector,
                           make_selector)

from conftest import exact_tip_distribution


def test_genesis_confidence_is_one(walk_tangle):
    for name in ("iota", "giota", "eiota"):
        sel = make_selector(name)
        for k in (1, 7, 50):
            est = estimate_confidence(walk_tangle, GENESIS, sel, k=k)
            assert est.hits == k and est.confidence == 1.0
            hits = confidence_profile(walk_tangle, sel, k=k)
            assert hits[GENESIS] == k


def test_tip_confidence_is_hit_rate(walk_tangle):
    # a tip is approved only by itself, so confidence == pick frequency
    sel = IotaSelector(alpha=0.0)
    k = 400
    hits = confidence_profile(walk_tangle, sel, k=k, master_seed=3)
    exact = exact_tip_distribution(walk_tangle.full_view(), 0.0)
    for tip, p in exact.items():
        sigma = math.sqrt(k * p * (1 - p))
        assert abs(int(hits[tip]) - k * p) <= 4 * sigma + 1


def test_profile_respects_cone_dominance(reference_tangle):
    # every cone containing a transaction also contains its ancestors, so
    # shared-draw hit counts can never increase along an approval edge
    sel = IotaSelector(alpha=1.0)
    hits = confidence_profile(reference_tangle, sel, k=200, master_seed=1)
    for tx in range(1, reference_tangle.n):
        for p in reference_tangle.parents_of(tx):
            assert hits[p] >= hits[tx]
    assert int(hits[GENESIS]) == 200


def test_estimate_matches_profile_scale(walk_tangle):
    # independent-substream estimator agrees with the shared-draw profile
    # within binomial noise
    sel = IotaSelector(alpha=5.0)
    k = 300
    hits = confidence_profile(walk_tangle, sel, k=k, master_seed=9)
    for tx in (1, 2, 6):
        est = estimate_confidence(walk_tangle, tx, sel, k=k, master_seed=9)
        p = est.confidence
        sigma = math.sqrt(k * max(p * (1 - p), 1e-9))
        assert abs(est.hits - int(hits[tx])) <= 4 * sigma + 3

    with pytest.raises(UnknownTransaction):
        estimate_confidence(walk_tangle, walk_tangle.n, sel)


def test_single_tip_draws_strategy_per_trial(walk_tangle):
    v = walk_tangle.full_view()
    sel = EIotaSelector(EIotaParams())
    tips = {single_tip(v, sel, substream(0, 5, j)) for j in range(40)}
    assert tips <= walk_tangle.tips
    assert len(tips) > 1


def test_conf95_integer_edges():
    # 19/20 is exactly 0.95: integer arithmetic must not lose the boundary
    assert conf95_count(np.array([19]), 20) == 1
    assert conf95_count(np.array([18]), 20) == 0
    assert conf95_count(np.array([94, 95, 96, 100]), 100) == 3
    assert conf95_count(np.array([97]), 100) == 1  # 97/100 -> 0.97 >= 0.95
    assert conf95_count(np.array([0]), 1) == 0
    assert conf95_count(np.array([1]), 1) == 1


def test_ninetyseven_of_hundred_reads_097():
    from tanglesim.metrics import ConfidenceEstimate
    est = ConfidenceEstimate(tx=4, k=100, hits=97)
    assert est.confidence == 0.97
    assert conf95_count(np.array([97]), 100) == 1


def test_finalize_report_counts(tmp_path):
    cfg = ScenarioConfig(tsa="eiota", tps=300.0, total=300, seed=17,
                         confidence_k=60)
    res = run(cfg)
    report, hits = finalize_report(res)
    assert report.total == 300
    assert report.approved + report.tips == 300
    assert report.walks == res.walks
    assert report.compute_walks == res.compute_walks
    assert report.mixture == res.mixture
    assert hits.shape[0] == 300
    assert int(hits[GENESIS]) == 60
    assert report.conf95 == conf95_count(hits, 60)

    mpath = tmp_path / "metrics.csv"
    write_metrics_csv(mpath, [report])
    lines = mpath.read_text().splitlines()
    assert lines[0] == METRICS_HEADER
    cells = lines[1].split(",")
    assert len(cells) == 12
    assert cells[0] == "eiota" and cells[1] == "17"
    a0, al, ah = (int(c) for c in cells[9:12])
    assert (a0, al, ah) == report.mixture
    assert float(cells[8]) == report.wall_s

    cpath = tmp_path / "confidence.csv"
    write_confidence_csv(cpath, hits, 60)
    clines = cpath.read_text().splitlines()
    assert clines[0] == "tx_id,confidence"
    assert len(clines) == 301
    assert clines[1] == f"0,{1.0!r}"
    got = {int(l.split(",")[0]): float(l.split(",")[1]) for l in clines[1:]}
    assert got[5] == hits[5] / 60


def test_metrics_row_blank_mixture_for_single_strategy():
    row = MetricsReport(tsa="iota", seed=1, total=10, approved=7, tips=3,
                        conf95=4, walks=18, compute_walks=18, wall_s=0.5,
                        mixture=None).csv_row()
    assert row.split(",")[9:] == ["", "", ""]
    assert len(row.split(",")) == 12


def test_confidence_csv_sampling(tmp_path):
    hits = np.arange(50, dtype=np.int64)
    ids = sample_ids(50, 10, master_seed=4)
    assert ids.shape[0] == 10
    assert list(ids) == sorted(set(map(int, ids)))
    again = sample_ids(50, 10, master_seed=4)
    assert (ids == again).all()
    assert (sample_ids(5, 10, master_seed=4) == np.arange(5)).all()

    cpath = tmp_path / "conf.csv"
    write_confidence_csv(cpath, hits, 50, ids=ids)
    lines = cpath.read_text().splitlines()
    assert len(lines) == 11
    assert [int(l.split(",")[0]) for l in lines[1:]] == list(map(int, ids))
