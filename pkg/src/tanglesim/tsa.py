"""Tip selection: weighted random walks and the three selector families.

A walk starts at genesis and repeatedly steps to one of the current
transaction's approvers, with probability proportional to
exp(alpha * cumulative_weight(approver)); alpha == 0 degenerates to a uniform
pick that reads no weights. A walk ends at the first transaction with no
approvers in the view.

Selectors bundle the walk policy for one issuance:

* `iota`:  two walks at a fixed alpha.
* `giota`: two walks at a fixed alpha plus a rescue parent drawn uniformly
             from tips older than an age threshold.
* `eiota`: per-issuance strategy draw: with probability p1 both walks are
             uniform, with p2 - p1 both use one alpha drawn from a low range,
             otherwise both use a fixed high alpha.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .core import GENESIS, TangleView
from .errors import ConfigInvalid, ConflictRetriesExhausted, NoChildren

KIND_UNIFORM = "uniform"
KIND_LOW = "low"
KIND_HIGH = "high"

DEFAULT_ALPHA = 5.0
DEFAULT_RETRY_BUDGET = 10


@dataclass(frozen=True)
class WalkStrategy:
    """Walk policy for one issuance: a kind label and the alpha it implies."""

    kind: str
    alpha: float


@dataclass(frozen=True)
class EIotaParams:
    """Mixture parameters for the eiota selector.

    p1 is the uniform-walk probability, p2 - p1 the low-alpha probability,
    the rest uses alpha_high. The low alpha is redrawn uniformly from
    `alpha_low` for every issuance that lands in the middle band.
    """

    p1: float = 0.1
    p2: float = 0.65
    alpha_low: tuple[float, float] = (0.1, 2.0)
    alpha_high: float = 5.0

    def validate(self) -> "EIotaParams":
        if not (0.0 < self.p1 < self.p2 < 1.0):
            raise ConfigInvalid(
                f"need 0 < p1 < p2 < 1, got p1={self.p1} p2={self.p2}")
        lo, hi = self.alpha_low
        if not (0.0 < lo <= hi < self.alpha_high):
            raise ConfigInvalid(
                f"low-alpha range must sit inside (0, alpha_high={self.alpha_high}): "
                f"{self.alpha_low}")
        return self

    @property
    def class_probabilities(self) -> tuple[float, float, float]:
        """(uniform, low, high) shares implied by (p1, p2)."""
        return self.p1, self.p2 - self.p1, 1.0 - self.p2


def draw_strategy(params: EIotaParams, rng: np.random.Generator) -> WalkStrategy:
    """One mixture draw. Consumes one uniform, plus a second in the low band."""
    r = rng.random()
    if r < params.p1:
        return WalkStrategy(KIND_UNIFORM, 0.0)
    if r < params.p2:
        lo, hi = params.alpha_low
        return WalkStrategy(KIND_LOW, lo + (hi - lo) * rng.random())
    return WalkStrategy(KIND_HIGH, params.alpha_high)


def transition_probabilities(view: TangleView, x: int,
                             alpha: float) -> tuple[list[int], np.ndarray]:
    """Approvers of x and their walk probabilities, in adjacency order.

    Mirrors the walk kernel bit for bit (shifted exponent, same child order),
    so exact distributions computed from this match empirical walk draws.
    """
    children = view.children_of(x)
    c = len(children)
    if c == 0:
        raise NoChildren(f"transaction {x} has no approvers")
    if alpha == 0.0:
        return children, np.full(c, 1.0 / c)
    cw = view.cw
    mh = max(int(cw[y]) for y in children)
    w = np.array([np.exp(alpha * float(int(cw[y]) - mh)) for y in children])
    return children, w / w.sum()


def walk_step(view: TangleView, current: int, alpha: float, u: float) -> int:
    """Single walk transition given a uniform draw u in [0, 1)."""
    y = K.walk_step(view.head, view.enext, view.echild, view.cw,
                    current, alpha, u)
    if y < 0:
        raise NoChildren(f"transaction {current} has no approvers")
    return int(y)


@dataclass(frozen=True)
class WalkResult:
    tip: int
    steps: int
    weighted: bool  # policy flag: True iff alpha != 0 (the walk reads weights)


def random_walk(view: TangleView, start: int, alpha: float,
                rng: np.random.Generator, record_path: bool = False
                ) -> tuple[WalkResult, list[int] | None]:
    """Walk from `start` to a tip of the view.

    No uniform is drawn at the terminal transaction, so a walk that starts
    on a tip consumes no randomness. The `weighted` flag marks the walk's
    policy class, not step count: alpha != 0 is a weight-reading walk even
    when it terminates immediately.
    """
    x = start
    steps = 0
    path = [start] if record_path else None
    head, enext, echild, cw = view.head, view.enext, view.echild, view.cw
    while head[x] >= 0:
        u = rng.random()
        x = K.walk_step(head, enext, echild, cw, x, alpha, u)
        steps += 1
        if record_path:
            path.append(int(x))
    return WalkResult(int(x), steps, alpha != 0.0), path


@dataclass(frozen=True)
class WalkerConfig:
    """Walk parameters: exponent, walker count, and start transaction.

    With n_walkers > 1 all walkers run and the one with the shortest path
    wins; ties go to the lowest tip id. Start defaults to genesis; any
    existing id may anchor the walk instead.
    """

    alpha: float = DEFAULT_ALPHA
    n_walkers: int = 1
    start: int = GENESIS

    def validate(self) -> "WalkerConfig":
        if self.alpha < 0.0:
            raise ConfigInvalid(f"alpha must be >= 0, got {self.alpha}")
        if self.n_walkers < 1:
            raise ConfigInvalid(f"n_walkers must be >= 1, got {self.n_walkers}")
        return self


@dataclass(frozen=True)
class WalkTrace:
    """Full record of one walk: strategy, path taken, winning tip."""

    strategy: WalkStrategy
    path: tuple[int, ...]
    tip: int
    weighted_computation: bool


def walk_trace(view: TangleView, config: WalkerConfig,
               rng: np.random.Generator) -> WalkTrace:
    """Run config.n_walkers recorded walks; return the winner's trace."""
    config.validate()
    best = None
    for _ in range(config.n_walkers):
        res, path = random_walk(view, config.start, config.alpha, rng,
                                record_path=True)
        key = (res.steps, res.tip)
        if best is None or key < best[0]:
            best = (key, res, path)
    _, res, path = best
    kind = KIND_UNIFORM if config.alpha == 0.0 else KIND_HIGH
    return WalkTrace(strategy=WalkStrategy(kind, config.alpha),
                     path=tuple(path), tip=res.tip,
                     weighted_computation=res.weighted)


@dataclass(frozen=True)
class ParentSelection:
    """Outcome of one issuance's tip selection.

    `parents` is what gets attached (a multiset; the conflict fallback
    duplicates a single tip). Walk accounting covers only the accepted
    attempt: one entry per walk actually kept.
    """

    parents: tuple[int, ...]
    strategy: WalkStrategy | None  # eiota issuance strategy, None otherwise
    alphas: tuple[float, ...]
    walk_lens: tuple[int, ...]
    weighted: tuple[bool, ...]
    retries: int
    fallback: bool
    third: int  # rescue parent id, -1 if none

    @property
    def walks(self) -> int:
        return len(self.walk_lens)

    @property
    def compute_walks(self) -> int:
        return sum(1 for w in self.weighted if w)


def _walk_slot(view, alpha, rng, n_walkers):
    """One parent slot: n_walkers walks, shortest path wins, ties by tip id.

    Returns (winner, all results) so walk accounting can cover every walk
    actually executed, not just the winner.
    """
    results = []
    best = None
    for _ in range(n_walkers):
        res, _ = random_walk(view, GENESIS, alpha, rng)
        results.append(res)
        key = (res.steps, res.tip)
        if best is None or key < best[0]:
            best = (key, res)
    return best[1], results


def _select_pair(view, rng, alpha, conflict_check, retry_budget, strategy,
                 n_walkers=1):
    """Two-slot selection with the shared conflict retry policy.

    Conflicting pairs are re-walked up to `retry_budget` times; after that
    the first slot of the final attempt is duplicated as both parents
    (fallback). Walk accounting covers only the accepted attempt; the
    fallback keeps only the first slot's walks. A fallback that still
    violates can only mean the issuer's own conflict tag is already
    approved by every reachable tip; that is surfaced as
    ConflictRetriesExhausted.
    """
    attempts = max(0, int(retry_budget)) + 1
    w1 = w2 = None
    all1 = all2 = None
    for attempt in range(attempts):
        w1, all1 = _walk_slot(view, alpha, rng, n_walkers)
        w2, all2 = _walk_slot(view, alpha, rng, n_walkers)
        if conflict_check is None or not conflict_check(w1.tip, w2.tip, -1):
            both = all1 + all2
            return ParentSelection(
                parents=(w1.tip, w2.tip), strategy=strategy,
                alphas=tuple(alpha for _ in both),
                walk_lens=tuple(r.steps for r in both),
                weighted=tuple(r.weighted for r in both),
                retries=attempt, fallback=False, third=-1,
            )
    if conflict_check(w1.tip, w1.tip, -1):
        raise ConflictRetriesExhausted(
            f"no conflict-free pair in {attempts} attempts and the "
            f"single-tip fallback {w1.tip} violates too")
    return ParentSelection(
        parents=(w1.tip, w1.tip), strategy=strategy,
        alphas=tuple(alpha for _ in all1),
        walk_lens=tuple(r.steps for r in all1),
        weighted=tuple(r.weighted for r in all1),
        retries=attempts - 1, fallback=True, third=-1,
    )


class IotaSelector:
    """Two weighted walks at a fixed alpha."""

    name = "iota"

    def __init__(self, alpha: float = DEFAULT_ALPHA,
                 retry_budget: int = DEFAULT_RETRY_BUDGET,
                 n_walkers: int = 1):
        if alpha < 0.0:
            raise ConfigInvalid(f"alpha must be >= 0, got {alpha}")
        self.alpha = float(alpha)
        self.retry_budget = int(retry_budget)
        self.n_walkers = int(n_walkers)

    def select(self, view: TangleView, rng: np.random.Generator,
               conflict_check=None) -> ParentSelection:
        return _select_pair(view, rng, self.alpha, conflict_check,
                            self.retry_budget, None, self.n_walkers)


def left_behind_tips(view: TangleView, threshold: float) -> np.ndarray:
    """Ids of tips whose age (view.now - issue time) exceeds the threshold."""
    n = view.n
    mask = (view.is_tip[:n] != 0) & ((view.now - view.issue_t[:n]) > threshold)
    return np.flatnonzero(mask)


class GIotaSelector:
    """Two weighted walks plus a uniformly drawn rescue parent.

    The rescue parent comes from tips older than `age_threshold` and is
    dropped if it duplicates a walk result, if no tip qualifies, or if
    adding it would violate conflict exclusion. The rescue draw is not a
    walk: it never counts toward walk totals.
    """

    name = "giota"

    def __init__(self, alpha: float = DEFAULT_ALPHA, age_threshold: float = 1.0,
                 retry_budget: int = DEFAULT_RETRY_BUDGET,
                 n_walkers: int = 1):
        if alpha < 0.0:
            raise ConfigInvalid(f"alpha must be >= 0, got {alpha}")
        if age_threshold <= 0.0:
            raise ConfigInvalid(f"age threshold must be > 0, got {age_threshold}")
        self.alpha = float(alpha)
        self.age_threshold = float(age_threshold)
        self.retry_budget = int(retry_budget)
        self.n_walkers = int(n_walkers)

    def select(self, view: TangleView, rng: np.random.Generator,
               conflict_check=None) -> ParentSelection:
        sel = _select_pair(view, rng, self.alpha, conflict_check,
                           self.retry_budget, None, self.n_walkers)
        if sel.fallback:
            return sel
        t1, t2 = sel.parents
        pool = left_behind_tips(view, self.age_threshold)
        pool = pool[(pool != t1) & (pool != t2)]
        if pool.shape[0] == 0:
            return sel
        k = int(rng.random() * pool.shape[0])
        if k >= pool.shape[0]:
            k = pool.shape[0] - 1
        third = int(pool[k])
        if conflict_check is not None and conflict_check(t1, t2, third):
            return sel
        return ParentSelection(
            parents=(t1, t2, third), strategy=None, alphas=sel.alphas,
            walk_lens=sel.walk_lens, weighted=sel.weighted,
            retries=sel.retries, fallback=False, third=third,
        )


class EIotaSelector:
    """Per-issuance mixture over uniform / low-alpha / high-alpha walk pairs.

    One strategy draw per issuance; both walks share it, and conflict
    retries re-walk under the same strategy.
    """

    name = "eiota"

    def __init__(self, params: EIotaParams | None = None,
                 retry_budget: int = DEFAULT_RETRY_BUDGET,
                 n_walkers: int = 1):
        self.params = (params or EIotaParams()).validate()
        self.retry_budget = int(retry_budget)
        self.n_walkers = int(n_walkers)

    def select(self, view: TangleView, rng: np.random.Generator,
               conflict_check=None) -> ParentSelection:
        strategy = draw_strategy(self.params, rng)
        return _select_pair(view, rng, strategy.alpha, conflict_check,
                            self.retry_budget, strategy, self.n_walkers)


def select_parents_iota(view: TangleView, alpha: float,
                        rng: np.random.Generator, conflict_check=None,
                        retry_budget: int = DEFAULT_RETRY_BUDGET
                        ) -> ParentSelection:
    """Two same-alpha walks; see IotaSelector."""
    return IotaSelector(alpha, retry_budget).select(view, rng, conflict_check)


def select_parents_giota(view: TangleView, alpha: float,
                         left_behind_threshold: float,
                         rng: np.random.Generator, conflict_check=None,
                         retry_budget: int = DEFAULT_RETRY_BUDGET
                         ) -> ParentSelection:
    """Two walks plus a rescue parent; see GIotaSelector."""
    return GIotaSelector(alpha, left_behind_threshold,
                         retry_budget).select(view, rng, conflict_check)


def select_parents_eiota(view: TangleView, params: EIotaParams,
                         rng: np.random.Generator, conflict_check=None,
                         retry_budget: int = DEFAULT_RETRY_BUDGET
                         ) -> ParentSelection:
    """Strategy-mixture selection; see EIotaSelector."""
    return EIotaSelector(params, retry_budget).select(view, rng, conflict_check)


def make_selector(name: str, *, alpha: float = DEFAULT_ALPHA,
                  p1: float = 0.1, p2: float = 0.65,
                  alpha_low: tuple[float, float] = (0.1, 2.0),
                  alpha_high: float = 5.0, age_threshold: float = 1.0,
                  retry_budget: int = DEFAULT_RETRY_BUDGET,
                  n_walkers: int = 1):
    """Build a selector by name: iota, giota, or eiota."""
    if name == "iota":
        return IotaSelector(alpha=alpha, retry_budget=retry_budget,
                            n_walkers=n_walkers)
    if name == "giota":
        return GIotaSelector(alpha=alpha, age_threshold=age_threshold,
                             retry_budget=retry_budget, n_walkers=n_walkers)
    if name == "eiota":
        params = EIotaParams(p1=p1, p2=p2, alpha_low=alpha_low,
                             alpha_high=alpha_high)
        return EIotaSelector(params=params, retry_budget=retry_budget,
                             n_walkers=n_walkers)
    raise ConfigInvalid(f"unknown tip selection algorithm: {name!r}")
