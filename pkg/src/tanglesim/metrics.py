"""Confidence estimation by repeated tip selection, plus the run report.

A transaction's confidence is the fraction of repeated single-tip
selections whose chosen tip (in)directly approves it. Two estimators ship:
a per-transaction one with an independent substream per (transaction,
trial), and a whole-tangle profile that shares one set of K trial draws
across every transaction (common random numbers). Shared draws make
comparisons exact: if every cone containing x' also contains x, the
profile can never rank x below x'.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .core import GENESIS, TangleState, TangleView
from .engine import RunResult
from .errors import UnknownTransaction
from .streams import (DOMAIN_CONFIDENCE, DOMAIN_CONFIDENCE_SHARED,
                      DOMAIN_SAMPLE, substream)
from .tsa import EIotaSelector, draw_strategy, random_walk

DEFAULT_K = 100

METRICS_HEADER = "tsa,seed,total,approved,tips,conf95,walks,compute_walks,wall_s,A0,AL,AH"


@dataclass(frozen=True)
class ConfidenceEstimate:
    tx: int
    k: int
    hits: int

    @property
    def confidence(self) -> float:
        return self.hits / self.k


def _trial_alpha(selector, rng) -> float:
    """The walk exponent one estimation trial uses under this selector."""
    if isinstance(selector, EIotaSelector):
        return draw_strategy(selector.params, rng).alpha
    return selector.alpha


def single_tip(view: TangleView, selector, rng: np.random.Generator) -> int:
    """One single-tip selection trial with the scenario's walk policy."""
    alpha = _trial_alpha(selector, rng)
    res, _ = random_walk(view, GENESIS, alpha, rng)
    return res.tip


def estimate_confidence(tangle: TangleState, tx: int, selector,
                        k: int = DEFAULT_K, master_seed: int = 0,
                        view: TangleView | None = None) -> ConfidenceEstimate:
    """K independent trials, each on its own (tx, trial) substream."""
    if tx < 0 or tx >= tangle.n:
        raise UnknownTransaction(f"no transaction with id {tx}")
    if view is None:
        view = tangle.full_view()
    hits = 0
    for j in range(k):
        rng = substream(master_seed, DOMAIN_CONFIDENCE, tx, j)
        tip = single_tip(view, selector, rng)
        if tangle.cone_contains(tip, tx):
            hits += 1
    return ConfidenceEstimate(tx=tx, k=k, hits=hits)


def confidence_profile(tangle: TangleState, selector, k: int = DEFAULT_K,
                       master_seed: int = 0,
                       view: TangleView | None = None) -> np.ndarray:
    """Hit counts for every transaction from K shared selection trials.

    Each trial walks to one tip and bumps that tip's whole past cone, so
    all N confidences cost K walks + K cone traversals total. Returns the
    integer hit array; divide by k for confidences.
    """
    if view is None:
        view = tangle.full_view()
    n = tangle.n
    hits = np.zeros(n, dtype=np.int64)
    p1, p2, p3 = tangle._par1, tangle._par2, tangle._par3
    sc = K.local_scratch(n)
    for j in range(k):
        rng = substream(master_seed, DOMAIN_CONFIDENCE_SHARED, j)
        tip = single_tip(view, selector, rng)
        K.bump_cone(p1, p2, p3, tip, -1, -1, hits,
                    sc.stamp, sc.stack, sc.next_epoch(n))
    return hits


def conf95_count(hits: np.ndarray, k: int) -> int:
    """Transactions at confidence >= 0.95, via exact integer arithmetic."""
    return int(np.count_nonzero(hits * 20 >= 19 * k))


@dataclass(frozen=True)
class MetricsReport:
    """One metrics.csv row's worth of run facts."""

    tsa: str
    seed: int
    total: int
    approved: int
    tips: int
    conf95: int
    walks: int
    compute_walks: int
    wall_s: float
    mixture: tuple[int, int, int] | None  # (A0, AL, AH); None unless eiota
    sim_time: float = 0.0

    def csv_row(self) -> str:
        a0 = al = ah = ""
        if self.mixture is not None:
            a0, al, ah = (str(v) for v in self.mixture)
        return (f"{self.tsa},{self.seed},{self.total},{self.approved},"
                f"{self.tips},{self.conf95},{self.walks},{self.compute_walks},"
                f"{self.wall_s!r},{a0},{al},{ah}")


def finalize_report(result: RunResult, k: int | None = None
                    ) -> tuple[MetricsReport, np.ndarray]:
    """Count approvals/tips/walks and run end-of-run confidence estimation.

    Returns the report plus the per-transaction hit array (shared-draw
    profile with the run's own TSA and seed; k defaults to the scenario's
    confidence_k).
    """
    cfg = result.cfg
    tangle = result.tangle
    k = cfg.confidence_k if k is None else k
    selector = cfg.build_selector()
    hits = confidence_profile(tangle, selector, k=k, master_seed=cfg.seed)
    total = tangle.n
    tips = len(tangle.tips)
    approved = total - tips
    report = MetricsReport(
        tsa=cfg.tsa, seed=cfg.seed, total=total, approved=approved,
        tips=tips, conf95=conf95_count(hits, k), walks=result.walks,
        compute_walks=result.compute_walks, wall_s=result.wall_s,
        mixture=result.mixture, sim_time=result.sim_time,
    )
    assert report.approved + report.tips == report.total
    assert report.compute_walks <= report.walks
    return report, hits


def write_metrics_csv(path, reports) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(METRICS_HEADER + "\n")
        for r in reports:
            f.write(r.csv_row() + "\n")


def write_confidence_csv(path, hits: np.ndarray, k: int,
                         ids=None) -> None:
    """Per-transaction confidence histogram; `ids` restricts to a sample."""
    if ids is None:
        ids = range(hits.shape[0])
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("tx_id,confidence\n")
        for tx in ids:
            f.write(f"{int(tx)},{float(hits[int(tx)]) / k!r}\n")


def sample_ids(n: int, sample: int, master_seed: int) -> np.ndarray:
    """Deterministic uniform sample of transaction ids, sorted ascending."""
    if sample >= n:
        return np.arange(n, dtype=np.int64)
    rng = substream(master_seed, DOMAIN_SAMPLE)
    ids = rng.choice(n, size=sample, replace=False)
    ids.sort()
    return ids.astype(np.int64)
