"""Desk-scale simulator for DAG ledgers with pluggable tip selection.

Core pieces: an append-only tangle with incremental cumulative weights
(`TangleState`), three tip-selection policies (uniform/biased walks,
rescue third parent, per-issuance mixture), a deterministic delayed-
visibility event loop (`Engine`), confidence estimation, and three
scripted attacks. Hot kernels run compiled when the extension built,
with a pure-Python fallback (`tanglesim._kernels.BACKEND` says which).
"""

__version__ = "0.1.0"

from ._kernels import BACKEND, COMPILED
from .core import (ADVERSARY, GENESIS, HONEST, ConflictRegistry, TangleState,
                   TangleView, Transaction, import_snapshot, new_tangle,
                   visible_view)
from .tsa import (EIotaParams, EIotaSelector, GIotaSelector, IotaSelector,
                  ParentSelection, WalkerConfig, WalkResult, WalkStrategy,
                  WalkTrace, draw_strategy, left_behind_tips, make_selector,
                  random_walk, transition_probabilities, walk_trace)
from .engine import (ApprovalMixtureStats, Engine, RunResult, ScenarioConfig,
                     record_mixture, run)
from .metrics import (ConfidenceEstimate, MetricsReport, conf95_count,
                      confidence_profile, estimate_confidence,
                      finalize_report, write_confidence_csv,
                      write_metrics_csv)
from .adversary import (AttackerConfig, AttackOutcome, run_attack,
                        run_large_weight, run_parasite, run_splitting)
from . import errors

__all__ = [
    "__version__", "BACKEND", "COMPILED",
    "ADVERSARY", "GENESIS", "HONEST", "ConflictRegistry", "TangleState",
    "TangleView", "Transaction", "import_snapshot", "new_tangle",
    "visible_view",
    "EIotaParams", "EIotaSelector", "GIotaSelector", "IotaSelector",
    "ParentSelection", "WalkerConfig", "WalkResult", "WalkStrategy",
    "WalkTrace", "draw_strategy", "left_behind_tips", "make_selector",
    "random_walk", "transition_probabilities", "walk_trace",
    "ApprovalMixtureStats", "Engine", "RunResult", "ScenarioConfig",
    "record_mixture", "run",
    "ConfidenceEstimate", "MetricsReport", "conf95_count",
    "confidence_profile", "estimate_confidence", "finalize_report",
    "write_confidence_csv", "write_metrics_csv",
    "AttackerConfig", "AttackOutcome", "run_attack", "run_large_weight",
    "run_parasite", "run_splitting",
    "errors",
]
