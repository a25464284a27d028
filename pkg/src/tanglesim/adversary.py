"""Attack scenarios: large-weight, parasite chain, and splitting.

Each runner drives one Engine, scheduling adversary callbacks between the
honest events. The adversary issues at rate pa * tps with constant spacing
(so its budget over any interval Delta never exceeds ceil(pa*tps*Delta)+1),
reads only the same delayed frontier honest nodes see, and attaches through
the engine so every move lands in the event log.

Success policies (the asymptotic arguments give no numbers):
* large_weight succeeds iff the double spend j overtakes the confirmed
  target: conf_j > conf_i at the horizon;
* parasite_chain succeeds iff j is actually adopted: conf_j > conf_i
  AND conf_j >= 0.5 (without the floor, both spends orphaning would
  count as a win for an attacker nobody believed);
* splitting succeeds iff both conflicting roots hold confidence >= 0.05
  at the horizon. Its sustained-split duration is the total time both
  roots held confidence >= 0.05, probed once per window on the live
  frontier: a fork only counts as splitting the network while both
  spends are actually believable, so weight kept "balanced" on a fork
  the honest traffic ignores contributes nothing.
Support issuance stops with the last honest issuance: weight pumped
into an idle network settles nothing and only pollutes the recorded
weight-gap trajectory. Confidence pairs are always estimated with
shared draws (common random numbers), K = 200 by default.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from .core import GENESIS, TangleState, visible_view
from .engine import Engine, RunResult, ScenarioConfig
from .errors import ConfigInvalid, InvalidPower, TargetNotConfirmed
from .metrics import confidence_profile, single_tip
from .tsa import random_walk
from .streams import DOMAIN_ADVERSARY, substream

KIND_LARGE_WEIGHT = "large_weight"
KIND_PARASITE = "parasite_chain"
KIND_SPLITTING = "splitting"
ATTACK_KINDS = (KIND_LARGE_WEIGHT, KIND_PARASITE, KIND_SPLITTING)

ATTACK_HEADER = "kind,tsa,seed,pa,success,conf_i,conf_j,tx_i,tx_j,duration_s"
GAP_HEADER = "time,weight_a,weight_b"

# trials per window for the splitting liveness probe; alive means
# hits/K >= 0.05 for both roots, i.e. 20*hits >= K in integers
SPLIT_PROBE_K = 60


@dataclass(frozen=True)
class AttackerConfig:
    """Adversary shape shared by all three attacks.

    pa is the adversary's power as a fraction of honest throughput; its
    issue rate is pa * tps. secret_period is the parasite build time T.
    attack_start defaults to 2 * delay_tau (splitting: 4 * delay_tau, so
    visible weights carry signal when the fork is placed); horizon
    defaults to the end of the honest schedule plus two windows.
    """

    kind: str
    pa: float = 0.25
    secret_period: float = 4.0
    reveal_delay: float = 0.0
    attack_start: float | None = None
    horizon: float | None = None
    target: int | None = None
    branching: int = 1
    confidence_k: int = 200

    def validate(self) -> "AttackerConfig":
        if self.kind not in ATTACK_KINDS:
            raise ConfigInvalid(f"unknown attack kind {self.kind!r}")
        if not (0.0 <= self.pa < 1.0):
            raise InvalidPower(f"pa must be in [0, 1), got {self.pa}")
        if self.kind == KIND_PARASITE and self.pa >= 0.5:
            raise InvalidPower(
                f"parasite attacker must be weaker than the honest users: "
                f"pa={self.pa} >= 0.5")
        if self.secret_period < 0:
            raise ConfigInvalid(f"secret_period must be >= 0: {self.secret_period}")
        if self.reveal_delay < 0:
            raise ConfigInvalid(f"reveal_delay must be >= 0: {self.reveal_delay}")
        if self.branching < 1:
            raise ConfigInvalid(f"branching must be >= 1: {self.branching}")
        if self.confidence_k < 1:
            raise ConfigInvalid(f"confidence_k must be >= 1: {self.confidence_k}")
        return self


@dataclass
class AttackOutcome:
    """Verdict plus the evidence: confidences, weight trajectory, run."""

    kind: str
    success: bool
    confidence_i: float
    confidence_j: float
    weight_gap: list[tuple[float, int, int]]
    tx_i: int
    tx_j: int
    sustained_s: float | None
    result: RunResult
    pa: float = 0.0

    def csv_row(self) -> str:
        cfg = self.result.cfg
        dur = "" if self.sustained_s is None else repr(self.sustained_s)
        return (f"{self.kind},{cfg.tsa},{cfg.seed},{self.pa!r},"
                f"{int(self.success)},{self.confidence_i!r},"
                f"{self.confidence_j!r},{self.tx_i},{self.tx_j},{dur}")


def write_outcome_csv(path, outcomes) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(ATTACK_HEADER + "\n")
        for o in outcomes:
            f.write(o.csv_row() + "\n")


def write_weight_gap_csv(path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(GAP_HEADER + "\n")
        for t, wa, wb in rows:
            f.write(f"{t!r},{wa},{wb}\n")


def _last_issue(eng: Engine) -> float:
    return eng._issue_times[-1] if eng._issue_times else 0.0


def _honest_end(eng: Engine) -> float:
    return _last_issue(eng) + 2.0 * eng.cfg.delay_tau


def _vis_weight(eng: Engine, tx: int) -> int:
    fr = eng.frontier
    if 0 <= tx < fr.cw.shape[0] and fr.visible[tx]:
        return int(fr.cw[tx])
    return 0


def _support_times(start: float, end: float, rate: float) -> list[float]:
    """Constant-spaced issue times in (start, end)."""
    if rate <= 0.0 or end <= start:
        return []
    out = []
    m = 1
    while True:
        t = start + m / rate
        if t >= end:
            return out
        out.append(t)
        m += 1


def _schedule_observer(eng: Engine, start: float, horizon: float, tau: float,
                       rows: list, a_of, b_of) -> None:
    step = tau if tau > 0 else max((horizon - start) / 16.0, 1e-9)

    def observe(engine: Engine, t: float) -> None:
        rows.append((t, a_of(engine), b_of(engine)))
        nxt = t + step
        if nxt <= horizon + 1e-12:
            engine.push_call(nxt, observe)

    eng.push_call(start, observe)


def _pair_confidence(tangle: TangleState, scenario: ScenarioConfig,
                     k: int, i: int, j: int) -> tuple[float, float]:
    hits = confidence_profile(tangle, scenario.build_selector(), k=k,
                              master_seed=scenario.seed)
    return float(hits[i]) / k, float(hits[j]) / k


# -- large weight -------------------------------------------------------------


def run_large_weight(atk: AttackerConfig, scenario: ScenarioConfig
                     ) -> AttackOutcome:
    """Publish a conflicting double spend of a confirmed transaction and
    back it with a support chain at rate pa * tps.

    The double spend j attaches to the victim i's own parents, so i never
    sits in j's past cone. Fails (by design, under healthy mixtures) when
    honest weight keeps accruing to i's side.
    """
    atk = atk.validate()
    if atk.kind != KIND_LARGE_WEIGHT:
        raise ConfigInvalid(f"expected kind {KIND_LARGE_WEIGHT}, got {atk.kind}")
    eng = Engine(scenario)
    scenario = eng.cfg
    tau = scenario.delay_tau
    t_attack = (atk.attack_start if atk.attack_start is not None
                else 0.25 * scenario.total / scenario.tps)
    horizon = atk.horizon if atk.horizon is not None else _honest_end(eng)
    support_end = min(horizon, _last_issue(eng))
    gap_rows: list[tuple[float, int, int]] = []
    state: dict[str, int] = {}

    def launch(engine: Engine, t: float) -> None:
        fr = engine.frontier
        n = engine.tangle.n
        if atk.target is not None:
            i = atk.target
            if not (0 < i < n and fr.visible[i] and fr.head[i] >= 0):
                raise TargetNotConfirmed(
                    f"target {i} is not a visible approved transaction at t={t}")
        else:
            vis = fr.visible[:n].copy()
            vis[GENESIS] = False
            approved = fr.head[:n] >= 0
            cand = np.flatnonzero(vis & approved)
            if cand.shape[0] == 0:
                raise TargetNotConfirmed(
                    f"no approved non-genesis transaction visible at t={t}")
            i = int(cand[np.argmax(fr.cw[cand])])
        vv = visible_view(engine.tangle, t)
        hits = confidence_profile(engine.tangle, engine.selector,
                                  k=atk.confidence_k,
                                  master_seed=scenario.seed, view=vv)
        conf_now = hits[i] / atk.confidence_k
        if conf_now < 0.5:
            raise TargetNotConfirmed(
                f"target {i} confidence {conf_now:.3f} < 0.5 at t={t}")
        engine.tangle.declare_conflict(i, "lw")
        j = engine.attach_adversary(
            engine.tangle.parents_of(i) or (GENESIS, GENESIS),
            issue_time=t, visible_time=t + tau, tag="lw")
        state["i"], state["j"], state["last"] = i, j, j
        for tm in _support_times(t, support_end, atk.pa * scenario.tps):
            engine.push_call(tm, _support)
        _schedule_observer(engine, t, horizon, tau, gap_rows,
                           lambda e: _vis_weight(e, state["i"]),
                           lambda e: _vis_weight(e, state["j"]))

    def _support(engine: Engine, t: float) -> None:
        prev = state["last"]
        state["last"] = engine.attach_adversary(
            (prev, prev), issue_time=t, visible_time=t + tau)

    eng.push_call(t_attack, launch)
    res = eng.run()
    i, j = state["i"], state["j"]
    conf_i, conf_j = _pair_confidence(res.tangle, scenario,
                                      atk.confidence_k, i, j)
    return AttackOutcome(
        kind=atk.kind, success=conf_j > conf_i, confidence_i=conf_i,
        confidence_j=conf_j, weight_gap=gap_rows, tx_i=i, tx_j=j,
        sustained_s=None, result=res, pa=atk.pa)


# -- parasite chain -----------------------------------------------------------


def run_parasite(atk: AttackerConfig, scenario: ScenarioConfig
                 ) -> AttackOutcome:
    """Secretly build a chain rooted at double spend j for secret_period
    seconds, publish the honest-looking spend i, then reveal the chain.

    The chain is branching-many strands; every chain transaction approves
    its strand predecessor plus one fixed early main-tangle anchor. All
    chain transactions become visible together at reveal + tau. The
    attacker stops issuing at publish time (its budget went into the
    chain), matching the zero-issuance degenerate case at T = 0.
    """
    atk = atk.validate()
    if atk.kind != KIND_PARASITE:
        raise ConfigInvalid(f"expected kind {KIND_PARASITE}, got {atk.kind}")
    eng = Engine(scenario)
    scenario = eng.cfg
    tau = scenario.delay_tau
    start = (atk.attack_start if atk.attack_start is not None else 2.0 * tau)
    publish = start + atk.secret_period
    reveal = publish + atk.reveal_delay
    chain_visible = reveal + tau
    horizon = atk.horizon if atk.horizon is not None else _honest_end(eng)
    adv_rng = substream(scenario.seed, DOMAIN_ADVERSARY)
    gap_rows: list[tuple[float, int, int]] = []
    state: dict = {}

    def launch(engine: Engine, t: float) -> None:
        fr = engine.frontier
        n = engine.tangle.n
        vis = np.flatnonzero(fr.visible[:n])
        early = [int(x) for x in vis if x != GENESIS][:2]
        if not early:
            early = [GENESIS]
        a1 = early[0]
        a2 = early[1] if len(early) > 1 else early[0]
        j = engine.attach_adversary((a1, a2), issue_time=t,
                                    visible_time=chain_visible, tag="ds")
        state["j"] = j
        state["anchor"] = a1
        state["strands"] = [j] * atk.branching
        for m, tm in enumerate(_support_times(t, publish,
                                              atk.pa * scenario.tps)):
            engine.push_call(tm, _make_chain_step(m))

    def _make_chain_step(m: int):
        def step(engine: Engine, t: float) -> None:
            s = m % atk.branching
            prev = state["strands"][s]
            state["strands"][s] = engine.attach_adversary(
                (prev, state["anchor"]), issue_time=t,
                visible_time=chain_visible)
        return step

    def publish_i(engine: Engine, t: float) -> None:
        tangle = engine.tangle

        def check(t1, t2, third):
            return tangle.pair_conflicts(t1, t2, third, new_tag="ds")

        view = replace(engine.frontier.view, now=t)
        sel = engine.selector.select(view, adv_rng, check)
        i = engine.attach_adversary(sel.parents, issue_time=t,
                                    visible_time=t + tau, tag="ds")
        state["i"] = i
        engine.push_call(reveal, _mark_reveal)
        _schedule_observer(engine, t, horizon, tau, gap_rows,
                           lambda e: _vis_weight(e, state["i"]),
                           lambda e: _vis_weight(e, state["j"]))

    def _mark_reveal(engine: Engine, t: float) -> None:
        engine.record(t, "reveal", tx=state["j"], tag="ds")

    eng.push_call(start, launch)
    eng.push_call(publish, publish_i)
    res = eng.run()
    i, j = state["i"], state["j"]
    conf_i, conf_j = _pair_confidence(res.tangle, scenario,
                                      atk.confidence_k, i, j)
    return AttackOutcome(
        kind=atk.kind, success=conf_j > conf_i and conf_j >= 0.5,
        confidence_i=conf_i, confidence_j=conf_j, weight_gap=gap_rows,
        tx_i=i, tx_j=j, sustained_s=None, result=res, pa=atk.pa)


# -- splitting ----------------------------------------------------------------


def run_splitting(atk: AttackerConfig, scenario: ScenarioConfig
                  ) -> AttackOutcome:
    """Fork the tangle with two conflicting roots on one parent pair, then
    feed the lighter branch at rate pa * tps to keep the split alive.

    The roots' shared parents come from two weighted walks over the
    attacker's visible view, so the fork lands on the spine the honest
    walks actually traverse. Each support decision compares the branches'
    weights as the attacker knows them: the visible weight plus its own
    not-yet-visible issues on that branch (ties go to root a). Four times
    per window an observer records both visible weights and probes
    SPLIT_PROBE_K single-tip selections on the live frontier; the probe
    interval counts toward the sustained-split duration iff both roots
    reach confidence >= 0.05 in that probe.
    """
    atk = atk.validate()
    if atk.kind != KIND_SPLITTING:
        raise ConfigInvalid(f"expected kind {KIND_SPLITTING}, got {atk.kind}")
    eng = Engine(scenario)
    scenario = eng.cfg
    tau = scenario.delay_tau
    fork = (atk.attack_start if atk.attack_start is not None else 4.0 * tau)
    horizon = atk.horizon if atk.horizon is not None else _honest_end(eng)
    support_end = min(horizon, _last_issue(eng))
    walk_alpha = (scenario.alpha_high if scenario.tsa == "eiota"
                  else scenario.alpha)
    gap_rows: list[tuple[float, int, int]] = []
    state: dict = {"alive": 0.0, "widx": 0}

    def launch(engine: Engine, t: float) -> None:
        view = replace(engine.frontier.view, now=t)
        rng = substream(scenario.seed, DOMAIN_ADVERSARY, 7)
        r1, _ = random_walk(view, GENESIS, walk_alpha, rng)
        r2, _ = random_walk(view, GENESIS, walk_alpha, rng)
        ra = engine.attach_adversary((r1.tip, r2.tip), issue_time=t,
                                     visible_time=t + tau, tag="split")
        rb = engine.attach_adversary((r1.tip, r2.tip), issue_time=t,
                                     visible_time=t + tau, tag="split")
        state["a"], state["b"] = ra, rb
        state["last_a"], state["last_b"] = ra, rb
        state["pend_a"] = deque([t + tau])
        state["pend_b"] = deque([t + tau])
        for tm in _support_times(t, support_end, atk.pa * scenario.tps):
            engine.push_call(tm, _support)
        engine.push_call(t + tau, _observe)

    def _own_weight(engine: Engine, t: float, key: str) -> int:
        pend = state["pend_" + key]
        while pend and pend[0] <= t:
            pend.popleft()
        return _vis_weight(engine, state[key]) + len(pend)

    def _support(engine: Engine, t: float) -> None:
        wa = _own_weight(engine, t, "a")
        wb = _own_weight(engine, t, "b")
        key = "b" if wb < wa else "a"
        prev = state["last_" + key]
        state["last_" + key] = engine.attach_adversary(
            (prev, prev), issue_time=t, visible_time=t + tau)
        state["pend_" + key].append(t + tau)

    probe_step = 0.25 * tau

    def _observe(engine: Engine, t: float) -> None:
        gap_rows.append((t, _vis_weight(engine, state["a"]),
                         _vis_weight(engine, state["b"])))
        view = replace(engine.frontier.view, now=t)
        widx = state["widx"]
        state["widx"] = widx + 1
        ka = kb = 0
        for trial in range(SPLIT_PROBE_K):
            rng = substream(scenario.seed, DOMAIN_ADVERSARY, 11, widx, trial)
            tip = single_tip(view, engine.selector, rng)
            ka += engine.tangle.cone_contains(tip, state["a"])
            kb += engine.tangle.cone_contains(tip, state["b"])
        if 20 * ka >= SPLIT_PROBE_K and 20 * kb >= SPLIT_PROBE_K:
            state["alive"] += probe_step
        nxt = t + probe_step
        if nxt <= horizon + 1e-12:
            engine.push_call(nxt, _observe)

    eng.push_call(fork, launch)
    res = eng.run()
    a, b = state["a"], state["b"]
    conf_a, conf_b = _pair_confidence(res.tangle, scenario,
                                      atk.confidence_k, a, b)
    return AttackOutcome(
        kind=atk.kind, success=min(conf_a, conf_b) >= 0.05,
        confidence_i=conf_a, confidence_j=conf_b, weight_gap=gap_rows,
        tx_i=a, tx_j=b, sustained_s=state["alive"], result=res, pa=atk.pa)


def run_attack(atk: AttackerConfig, scenario: ScenarioConfig) -> AttackOutcome:
    """Dispatch to the runner for atk.kind."""
    atk.validate()
    runner = {KIND_LARGE_WEIGHT: run_large_weight,
              KIND_PARASITE: run_parasite,
              KIND_SPLITTING: run_splitting}[atk.kind]
    return runner(atk, scenario)
