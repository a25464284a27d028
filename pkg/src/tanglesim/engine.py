"""Event-driven simulator: timed arrivals, delayed visibility, issuance.

Transactions issued at time t become visible to every node at t + tau, so
each issuer selects parents against the sub-tangle the network has actually
seen. The loop is a single heap of (time, kind, seq) events; at equal times
visibility changes land before adversary actions, which land before honest
issuances. All state mutation happens on the loop thread.

Issuances falling between two consecutive visibility changes all read the
same frozen frontier, so their parent selections are independent and may be
fanned out to worker threads; results are committed in event order either
way, which is what makes worker count irrelevant to the output.
"""
from __future__ import annotations

import heapq
import json
import time as _time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import _kernels as K
from .core import ADVERSARY, GENESIS, HONEST, TangleState, TangleView
from .errors import ConfigInvalid, NotEIota
from .streams import DOMAIN_ARRIVALS, DOMAIN_ISSUE, substream
from .tsa import KIND_HIGH, KIND_LOW, KIND_UNIFORM, make_selector

ARRIVAL_POISSON = "poisson"
ARRIVAL_CONSTANT = "constant"

# event kind priorities: at one timestamp, the network learns of
# transactions first, the adversary acts second, honest issuers go last
_PRIO_VISIBLE = 0
_PRIO_ADV = 1
_PRIO_ISSUE = 2

EVENT_KEYS = ("t", "kind", "tx", "strategy", "alpha", "parents",
              "walk_lens", "wcomp", "retries", "fallback", "third", "tag")


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything one honest-traffic run needs.

    `total` counts genesis, so a run issues total - 1 transactions. The
    giota age threshold defaults to max(3 * delay_tau, 20 / tps): at least
    three visibility windows old, and never below twenty mean inter-arrival
    times.
    """

    tsa: str = "iota"
    alpha: float = 5.0
    p1: float = 0.1
    p2: float = 0.65
    alpha_low: tuple[float, float] = (0.1, 2.0)
    alpha_high: float = 5.0
    giota_threshold: float | None = None
    tps: float = 2000.0
    arrival: str = ARRIVAL_POISSON
    delay_tau: float = 1.0
    total: int = 8000
    seed: int = 42
    workers: int = 1
    retry_budget: int = 10
    n_walkers: int = 1
    confidence_k: int = 100
    confidence_sample: int | None = None

    def validate(self) -> "ScenarioConfig":
        if self.tsa not in ("iota", "giota", "eiota"):
            raise ConfigInvalid(f"unknown tsa {self.tsa!r}")
        if self.tps <= 0:
            raise ConfigInvalid(f"tps must be > 0, got {self.tps}")
        if self.total < 1:
            raise ConfigInvalid(f"total must be >= 1, got {self.total}")
        if self.delay_tau < 0:
            raise ConfigInvalid(f"delay_tau must be >= 0, got {self.delay_tau}")
        if self.arrival not in (ARRIVAL_POISSON, ARRIVAL_CONSTANT):
            raise ConfigInvalid(f"unknown arrival mode {self.arrival!r}")
        if self.seed < 0:
            raise ConfigInvalid(f"seed must be >= 0, got {self.seed}")
        if self.workers < 1:
            raise ConfigInvalid(f"workers must be >= 1, got {self.workers}")
        if self.n_walkers < 1:
            raise ConfigInvalid(f"n_walkers must be >= 1, got {self.n_walkers}")
        if self.confidence_k < 1:
            raise ConfigInvalid(f"confidence_k must be >= 1, got {self.confidence_k}")
        if self.giota_threshold is not None and self.giota_threshold <= 0:
            raise ConfigInvalid(
                f"giota_threshold must be > 0, got {self.giota_threshold}")
        # selector construction validates alpha and the eiota mixture
        self.build_selector()
        return self

    def threshold(self) -> float:
        if self.giota_threshold is not None:
            return self.giota_threshold
        # 3 windows: younger "left-behind" tips are often just propagating,
        # and rescuing them drags the third parent onto live competition
        return max(3.0 * self.delay_tau, 20.0 / self.tps)

    def build_selector(self):
        return make_selector(
            self.tsa, alpha=self.alpha, p1=self.p1, p2=self.p2,
            alpha_low=self.alpha_low, alpha_high=self.alpha_high,
            age_threshold=self.threshold(), retry_budget=self.retry_budget,
            n_walkers=self.n_walkers)


def schedule_arrivals(cfg: ScenarioConfig, rng: np.random.Generator):
    """Yield honest issue times forever: k/tps, or exponential gaps."""
    lam = cfg.tps
    if cfg.arrival == ARRIVAL_CONSTANT:
        k = 1
        while True:
            yield k / lam
            k += 1
    else:
        t = 0.0
        while True:
            t += rng.exponential(1.0 / lam)
            yield t


class Frontier:
    """The network's view of the tangle, advanced one visibility at a time.

    Keeps its own child adjacency, cumulative weights, and tip flags over
    visible transactions only. The owned TangleView aliases these arrays
    and is refreshed in place; the engine hands per-issuance copies (shared
    arrays, per-issuance `now`) to selectors.
    """

    def __init__(self, tangle: TangleState):
        self.tangle = tangle
        cap = 1024
        self.head = np.full(cap, -1, dtype=np.int64)
        self.echild = np.empty(4 * cap, dtype=np.int64)
        self.enext = np.empty(4 * cap, dtype=np.int64)
        self.n_edges = 0
        self.cw = np.zeros(cap, dtype=np.int64)
        self.is_tip = np.zeros(cap, dtype=np.uint8)
        self.visible = np.zeros(cap, dtype=bool)
        self.tip_count = 0
        self.visible_count = 0
        self.view = TangleView(
            n=0, head=self.head, echild=self.echild, enext=self.enext,
            cw=self.cw, is_tip=self.is_tip, tip_count=0, now=0.0,
            issue_t=tangle._issue, par1=tangle._par1, par2=tangle._par2,
            par3=tangle._par3, visible=self.visible)
        self.reveal(GENESIS)

    def _ensure(self, n: int) -> None:
        if n > self.head.shape[0]:
            cap = max(n, 2 * self.head.shape[0])
            for name, fill in (("head", -1), ("cw", 0), ("is_tip", 0),
                               ("visible", False)):
                old = getattr(self, name)
                new = np.full(cap, fill, dtype=old.dtype)
                new[: old.shape[0]] = old
                setattr(self, name, new)

    def _add_edge(self, parent: int, child: int) -> None:
        e = self.n_edges
        if e == self.echild.shape[0]:
            self.echild = np.resize(self.echild, 2 * e)
            self.enext = np.resize(self.enext, 2 * e)
        self.echild[e] = child
        self.enext[e] = self.head[parent]
        self.head[parent] = e
        self.n_edges = e + 1

    def reveal(self, tx: int) -> None:
        """Make one transaction visible; parents must already be visible."""
        t = self.tangle
        self._ensure(tx + 1)
        self.visible[tx] = True
        self.visible_count += 1
        self.cw[tx] += 1  # own weight; approvers may have been counted already
        parents = t.parents_of(tx) if tx != GENESIS else ()
        distinct = list(dict.fromkeys(parents))
        for p in distinct:
            if self.is_tip[p]:
                self.is_tip[p] = 0
                self.tip_count -= 1
            self._add_edge(p, tx)
        if distinct:
            d = distinct + [-1] * (3 - len(distinct))
            sc = K.local_scratch(t.n)
            K.bump_cone(t._par1, t._par2, t._par3, d[0], d[1], d[2],
                        self.cw, sc.stamp, sc.stack, sc.next_epoch(t.n))
        if self.head[tx] < 0:
            self.is_tip[tx] = 1
            self.tip_count += 1
        self._sync_view()

    def _sync_view(self) -> None:
        # the tangle may hold attached-but-unrevealed txs past our capacity
        self._ensure(self.tangle.n)
        v = self.view
        v.n = self.tangle.n
        v.head = self.head
        v.echild = self.echild
        v.enext = self.enext
        v.cw = self.cw
        v.is_tip = self.is_tip
        v.visible = self.visible
        v.tip_count = self.tip_count
        v.par1 = self.tangle._par1
        v.par2 = self.tangle._par2
        v.par3 = self.tangle._par3
        v.issue_t = self.tangle._issue


def format_event(rec: dict) -> str:
    """Render one event record; key order is fixed by EVENT_KEYS."""
    ordered = {k: rec[k] for k in EVENT_KEYS if k in rec}
    return json.dumps(ordered, separators=(",", ":"))


@dataclass
class RunResult:
    """Everything a finished run hands to metrics and the CLI."""

    cfg: ScenarioConfig
    tangle: TangleState
    events: list[dict]
    walks: int
    compute_walks: int
    issuances: int
    mixture: tuple[int, int, int] | None  # (A0, AL, AH); None unless eiota
    sim_time: float
    wall_s: float

    def event_lines(self) -> list[str]:
        return [format_event(r) for r in self.events]


class Engine:
    """Owns the heap, the tangle, and the frontier for one run.

    Adversary controllers participate by scheduling callbacks with
    `push_call` and attaching through `attach_adversary`; the engine never
    needs to know which attack is running.
    """

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg.validate()
        self.tangle = TangleState()
        self.frontier = Frontier(self.tangle)
        self.selector = cfg.build_selector()
        self.events: list[dict] = []
        self.heap: list = []
        self._seq = 0
        self.walks = 0
        self.compute_walks = 0
        self.issuances = 0
        self.a0 = self.al = self.ah = 0
        self.now = 0.0
        self._issue_times: list[float] = []
        arrivals = schedule_arrivals(cfg, substream(cfg.seed, DOMAIN_ARRIVALS))
        for k in range(cfg.total - 1):
            t = next(arrivals)
            self._issue_times.append(t)
            self._push(t, _PRIO_ISSUE, ("issue", k))

    # -- scheduling ----------------------------------------------------------

    def _push(self, t: float, prio: int, payload) -> None:
        heapq.heappush(self.heap, (t, prio, self._seq, payload))
        self._seq += 1

    def push_call(self, t: float, fn: Callable[["Engine", float], None]) -> None:
        """Schedule an adversary/observer callback at time t."""
        self._push(t, _PRIO_ADV, ("call", fn))

    # -- attach paths ----------------------------------------------------------

    def _conflict_check(self, t1: int, t2: int, third: int) -> bool:
        return self.tangle.pair_conflicts(t1, t2, third)

    def _commit_issue(self, t: float, sel) -> int:
        cfg = self.cfg
        tx = self.tangle.attach(
            sel.parents, issue_time=t, visible_time=t + cfg.delay_tau,
            issuer=HONEST)
        self._push(t + cfg.delay_tau, _PRIO_VISIBLE, ("visible", tx))
        self.walks += sel.walks
        self.compute_walks += sel.compute_walks
        self.issuances += 1
        strategy = sel.strategy
        if strategy is not None:
            if strategy.kind == KIND_UNIFORM:
                self.a0 += 1
            elif strategy.kind == KIND_LOW:
                self.al += 1
            else:
                self.ah += 1
        self.events.append({
            "t": t, "kind": "issue", "tx": tx,
            "strategy": strategy.kind if strategy else None,
            "alpha": sel.alphas[0] if sel.alphas else None,
            "parents": list(sel.parents),
            "walk_lens": list(sel.walk_lens),
            "wcomp": [bool(w) for w in sel.weighted],
            "retries": sel.retries, "fallback": sel.fallback,
            "third": sel.third, "tag": None,
        })
        return tx

    def attach_adversary(self, parents, *, issue_time: float,
                         visible_time: float, tag: str | None = None,
                         kind: str = "adv") -> int:
        """Adversary attach: no walks, visibility at the caller's chosen time."""
        tx = self.tangle.attach(
            parents, issue_time=issue_time, visible_time=visible_time,
            issuer=ADVERSARY, conflict_set=tag)
        self._push(visible_time, _PRIO_VISIBLE, ("visible", tx))
        self.events.append({
            "t": issue_time, "kind": kind, "tx": tx, "strategy": None,
            "alpha": None, "parents": list(parents), "walk_lens": [],
            "wcomp": [], "retries": 0, "fallback": False, "third": -1,
            "tag": tag,
        })
        return tx

    def record(self, t: float, kind: str, **extra) -> None:
        """Append a marker record (e.g. a reveal) to the event log."""
        rec = {"t": t, "kind": kind, "tx": extra.pop("tx", -1),
               "strategy": None, "alpha": None, "parents": [],
               "walk_lens": [], "wcomp": [], "retries": 0,
               "fallback": False, "third": -1, "tag": extra.pop("tag", None)}
        self.events.append(rec)

    # -- the loop -------------------------------------------------------------

    def _select_one(self, item):
        k, t = item
        rng = substream(self.cfg.seed, DOMAIN_ISSUE, k)
        view = replace(self.frontier.view, now=t)
        return self.selector.select(view, rng, self._conflict_check)

    def _run_batch(self, batch, pool) -> None:
        if pool is not None and len(batch) > 1:
            selections = list(pool.map(self._select_one, batch,
                                       chunksize=max(1, len(batch) // 32)))
        else:
            selections = [self._select_one(item) for item in batch]
        for (k, t), sel in zip(batch, selections):
            self._commit_issue(t, sel)

    def run(self) -> RunResult:
        cfg = self.cfg
        pool = (ThreadPoolExecutor(max_workers=cfg.workers)
                if cfg.workers > 1 else None)
        started = _time.perf_counter()
        try:
            heap = self.heap
            tau = cfg.delay_tau
            batch: list[tuple[int, float]] = []
            while heap:
                t, prio, _, payload = heapq.heappop(heap)
                self.now = t
                if payload[0] == "issue":
                    batch.append((payload[1], t))
                    # Extend while issues stay at the heap front AND precede
                    # the first batch member's own visibility at t + tau;
                    # that event does not exist in the heap yet (it is
                    # scheduled at commit), so the heap alone cannot bound
                    # the batch.
                    limit = t + tau
                    while (heap and heap[0][3][0] == "issue"
                           and heap[0][0] < limit):
                        t2, _, _, payload2 = heapq.heappop(heap)
                        self.now = t2
                        batch.append((payload2[1], t2))
                    self._run_batch(batch, pool)
                    batch.clear()
                elif payload[0] == "visible":
                    self.frontier.reveal(payload[1])
                else:  # ("call", fn)
                    payload[1](self, t)
            wall = _time.perf_counter() - started
        finally:
            if pool is not None:
                pool.shutdown(wait=False)
        mixture = (self.a0, self.al, self.ah) if cfg.tsa == "eiota" else None
        return RunResult(
            cfg=cfg, tangle=self.tangle, events=self.events,
            walks=self.walks, compute_walks=self.compute_walks,
            issuances=self.issuances, mixture=mixture,
            sim_time=self.now, wall_s=wall,
        )


def run(cfg: ScenarioConfig) -> RunResult:
    """Run one honest-traffic scenario to completion."""
    return Engine(cfg).run()


@dataclass(frozen=True)
class ApprovalMixtureStats:
    """Strategy-class tallies over one time window; a == a0 + al + ah."""

    window: tuple[float, float]
    a: int
    a0: int
    al: int
    ah: int


def record_mixture(events: list[dict], tau: float) -> list[ApprovalMixtureStats]:
    """Tally issuances by strategy class per visibility window.

    Windows are [k*tau, (k+1)*tau) over issue times; tau <= 0 collapses
    everything into a single window. Raises NotEIota when the log carries
    no strategy draws (single-strategy runs).
    """
    issues = [e for e in events if e["kind"] == "issue"]
    if not issues or any(e["strategy"] is None for e in issues):
        raise NotEIota("mixture stats are only defined for eiota event logs")
    width = tau if tau > 0 else None
    buckets: dict[int, list[int]] = {}
    for e in issues:
        k = int(e["t"] // width) if width else 0
        counts = buckets.setdefault(k, [0, 0, 0])
        if e["strategy"] == KIND_UNIFORM:
            counts[0] += 1
        elif e["strategy"] == KIND_LOW:
            counts[1] += 1
        else:
            counts[2] += 1
    out = []
    last_t = max(e["t"] for e in issues)
    for k in sorted(buckets):
        a0, al, ah = buckets[k]
        window = (k * width, (k + 1) * width) if width else (0.0, last_t)
        out.append(ApprovalMixtureStats(window=window, a=a0 + al + ah,
                                        a0=a0, al=al, ah=ah))
    return out
