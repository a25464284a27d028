"""Command-line front door: scenario config, runs, sweeps, file emission.

Subcommands: run | attack | compare | confidence | export. Every option
can come from an INI config file (sections [scenario], [attack],
[compare]); a command-line flag always wins over its config twin. Each
invocation writes resolved.cfg next to its outputs so a directory is
self-describing: resolved config + version stamp + seed reproduce the
run byte for byte (wall_s excepted, being wall-clock measurement).

Exit codes: 0 success, 1 configuration/input errors, 2 unexpected
runtime failures. The default output directory is $TANGLESIM_OUT or
./out.
"""
from __future__ import annotations

import argparse
import configparser
import os
import statistics
import sys
from dataclasses import replace

from . import __version__
from .adversary import (AttackerConfig, run_attack, write_outcome_csv,
                        write_weight_gap_csv)
from .core import import_snapshot
from .engine import ScenarioConfig, run
from .errors import (ConfigInvalid, InvalidPower, IoFailure, NotEIota,
                     TargetNotConfirmed)
from .metrics import (confidence_profile, finalize_report, sample_ids,
                      write_confidence_csv, write_metrics_csv)

VERSION = __version__
OUT_ENV = "TANGLESIM_OUT"

_CONFIG_ERRORS = (ConfigInvalid, InvalidPower, TargetNotConfirmed, IoFailure,
                  NotEIota)


def _pair(text: str) -> tuple[float, float]:
    parts = text.replace(",", " ").split()
    if len(parts) != 2:
        raise ValueError(f"expected two numbers, got {text!r}")
    return float(parts[0]), float(parts[1])


def _opt(conv):
    def parse(text):
        return None if text in ("", "none", "None") else conv(text)
    return parse


# config key -> parser, one entry per ScenarioConfig field
_SCENARIO_KEYS = {
    "tsa": str, "alpha": float, "p1": float, "p2": float,
    "alpha_low": _pair, "alpha_high": float,
    "giota_threshold": _opt(float), "tps": float, "arrival": str,
    "delay_tau": float, "total": int, "seed": int, "workers": int,
    "retry_budget": int, "n_walkers": int, "confidence_k": int,
    "confidence_sample": _opt(int),
}

_ATTACK_KEYS = {
    "kind": str, "pa": float, "secret_period": float, "reveal_delay": float,
    "attack_start": _opt(float), "horizon": _opt(float),
    "target": _opt(int), "branching": int, "confidence_k": int,
}


def _load_ini(path: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser()
    try:
        with open(path, "r", encoding="utf-8") as f:
            parser.read_file(f)
    except OSError as e:
        raise IoFailure(f"cannot read config file {path}: {e}") from e
    except configparser.Error as e:
        raise ConfigInvalid(f"bad config file {path}: {e}") from e
    return parser


def _resolve(ns: argparse.Namespace, section: str, keys: dict,
             flag_prefix: str = "") -> dict:
    """Merge config-file section and flags; flags win. Missing keys are
    left to the dataclass defaults."""
    out: dict = {}
    if ns.config:
        ini = _load_ini(ns.config)
        if ini.has_section(section):
            for key, raw in ini.items(section):
                if key not in keys:
                    raise ConfigInvalid(f"unknown key [{section}] {key}")
                try:
                    out[key] = keys[key](raw)
                except ValueError as e:
                    raise ConfigInvalid(
                        f"bad value for [{section}] {key}: {raw!r} ({e})"
                    ) from e
    for key in keys:
        val = getattr(ns, flag_prefix + key, None)
        if val is not None:
            out[key] = val
    return out


def _scenario(ns: argparse.Namespace) -> ScenarioConfig:
    values = _resolve(ns, "scenario", _SCENARIO_KEYS)
    if values.get("alpha_low") is not None:
        values["alpha_low"] = tuple(values["alpha_low"])
    return ScenarioConfig(**values).validate()


def _attacker(ns: argparse.Namespace) -> AttackerConfig:
    values = _resolve(ns, "attack", _ATTACK_KEYS, flag_prefix="atk_")
    if "kind" not in values:
        raise ConfigInvalid("attack requires --kind (or [attack] kind)")
    return AttackerConfig(**values).validate()


def _outdir(ns: argparse.Namespace) -> str:
    path = ns.out or os.environ.get(OUT_ENV) or "out"
    os.makedirs(path, exist_ok=True)
    return path


def _write_resolved(path: str, subcommand: str, scenario=None, attack=None,
                    extra: dict | None = None) -> None:
    ini = configparser.ConfigParser()
    ini["meta"] = {"version": VERSION, "subcommand": subcommand}
    if scenario is not None:
        ini["scenario"] = {
            key: ("" if val is None else
                  f"{val[0]!r} {val[1]!r}" if key == "alpha_low" else
                  repr(val) if isinstance(val, float) else str(val))
            for key, val in (
                (k, getattr(scenario, k)) for k in _SCENARIO_KEYS)
        }
    if attack is not None:
        ini["attack"] = {
            key: "" if val is None else
            repr(val) if isinstance(val, float) else str(val)
            for key, val in ((k, getattr(attack, k)) for k in _ATTACK_KEYS)
        }
    if extra:
        ini[subcommand] = {k: str(v) for k, v in extra.items()}
    with open(path, "w", encoding="utf-8") as f:
        ini.write(f)


def _write_lines(path: str, lines) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        for line in lines:
            f.write(line + "\n")


# -- subcommands ---------------------------------------------------------------


def cmd_run(ns: argparse.Namespace) -> int:
    cfg = _scenario(ns)
    out = _outdir(ns)
    result = run(cfg)
    report, _hits = finalize_report(result)
    write_metrics_csv(os.path.join(out, "metrics.csv"), [report])
    _write_lines(os.path.join(out, "events.log"), result.event_lines())
    result.tangle.export_snapshot(os.path.join(out, "snapshot.txt"))
    if ns.dot:
        result.tangle.export_dot(os.path.join(out, "tangle.dot"))
    _write_resolved(os.path.join(out, "resolved.cfg"), "run", scenario=cfg)
    print(f"{out}/metrics.csv: {report.csv_row()}")
    return 0


def cmd_attack(ns: argparse.Namespace) -> int:
    cfg = _scenario(ns)
    atk = _attacker(ns)
    out = _outdir(ns)
    outcome = run_attack(atk, cfg)
    result = outcome.result
    report, _hits = finalize_report(result)
    write_outcome_csv(os.path.join(out, "attack_outcome.csv"), [outcome])
    write_weight_gap_csv(os.path.join(out, "weight_gap.csv"),
                         outcome.weight_gap)
    write_metrics_csv(os.path.join(out, "metrics.csv"), [report])
    _write_lines(os.path.join(out, "events.log"), result.event_lines())
    result.tangle.export_snapshot(os.path.join(out, "snapshot.txt"))
    if ns.dot:
        result.tangle.export_dot(os.path.join(out, "tangle.dot"))
    _write_resolved(os.path.join(out, "resolved.cfg"), "attack",
                    scenario=cfg, attack=atk)
    print(f"{atk.kind}: success={outcome.success} "
          f"conf_i={outcome.confidence_i:.3f} conf_j={outcome.confidence_j:.3f}")
    return 0


SUMMARY_HEADER = ("tsa,approved_med,tips_med,conf95_med,walks_med,"
                  "compute_walks_med,wall_s_med")


def cmd_compare(ns: argparse.Namespace) -> int:
    cfg = _scenario(ns)
    extra = _resolve(ns, "compare", {"tsas": str, "seeds": str})
    tsas_raw = [t.strip() for t in extra.get("tsas", "").split(",") if t.strip()]
    seeds = [int(s) for s in extra.get("seeds", "").replace(",", " ").split()]
    tsas: list[str] = []
    for t in tsas_raw:
        if t in tsas:
            print(f"warning: duplicate tsa {t!r} ignored", file=sys.stderr)
        else:
            tsas.append(t)
    if len(tsas) < 2:
        raise ConfigInvalid("compare needs at least two distinct TSAs")
    if not seeds:
        raise ConfigInvalid("compare needs a seed list")
    out = _outdir(ns)
    reports = []
    for tsa in tsas:
        for seed in seeds:
            cell = replace(cfg, tsa=tsa, seed=seed).validate()
            reports.append(finalize_report(run(cell))[0])
    write_metrics_csv(os.path.join(out, "metrics.csv"), reports)
    lines = [SUMMARY_HEADER]
    for tsa in tsas:
        rows = [r for r in reports if r.tsa == tsa]
        med = lambda vals: statistics.median(vals)
        lines.append(
            f"{tsa},{med([r.approved for r in rows])!r},"
            f"{med([r.tips for r in rows])!r},"
            f"{med([r.conf95 for r in rows])!r},"
            f"{med([r.walks for r in rows])!r},"
            f"{med([r.compute_walks for r in rows])!r},"
            f"{med([r.wall_s for r in rows])!r}")
    _write_lines(os.path.join(out, "summary.csv"), lines)
    _write_resolved(os.path.join(out, "resolved.cfg"), "compare",
                    scenario=cfg,
                    extra={"tsas": ",".join(tsas),
                           "seeds": " ".join(map(str, seeds))})
    for line in lines:
        print(line)
    return 0


def cmd_confidence(ns: argparse.Namespace) -> int:
    if not ns.snapshot:
        raise ConfigInvalid("confidence requires --snapshot")
    cfg = _scenario(ns)
    out = _outdir(ns)
    tangle = import_snapshot(ns.snapshot)
    hits = confidence_profile(tangle, cfg.build_selector(),
                              k=cfg.confidence_k, master_seed=cfg.seed)
    ids = None
    if cfg.confidence_sample is not None:
        ids = sample_ids(tangle.n, cfg.confidence_sample, cfg.seed)
    write_confidence_csv(os.path.join(out, "confidence.csv"), hits,
                         cfg.confidence_k, ids=ids)
    _write_resolved(os.path.join(out, "resolved.cfg"), "confidence",
                    scenario=cfg, extra={"snapshot": ns.snapshot})
    return 0


def cmd_export(ns: argparse.Namespace) -> int:
    if not ns.snapshot:
        raise ConfigInvalid("export requires --snapshot")
    out = _outdir(ns)
    tangle = import_snapshot(ns.snapshot)
    tangle.export_dot(os.path.join(out, "tangle.dot"))
    _write_resolved(os.path.join(out, "resolved.cfg"), "export",
                    extra={"snapshot": ns.snapshot})
    return 0


# -- parser --------------------------------------------------------------------


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("scenario")
    g.add_argument("--tsa", choices=("iota", "giota", "eiota"))
    g.add_argument("--alpha", type=float)
    g.add_argument("--p1", type=float)
    g.add_argument("--p2", type=float)
    g.add_argument("--alpha-low", dest="alpha_low", type=float, nargs=2,
                   metavar=("LO", "HI"))
    g.add_argument("--alpha-high", dest="alpha_high", type=float)
    g.add_argument("--giota-threshold", dest="giota_threshold", type=float)
    g.add_argument("--tps", type=float)
    g.add_argument("--arrival", choices=("poisson", "constant"))
    g.add_argument("--delay-tau", "--tau", dest="delay_tau", type=float)
    g.add_argument("--total", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--workers", type=int)
    g.add_argument("--retry-budget", dest="retry_budget", type=int)
    g.add_argument("--n-walkers", dest="n_walkers", type=int)
    g.add_argument("--confidence-k", dest="confidence_k", type=int)
    g.add_argument("--confidence-sample", dest="confidence_sample", type=int)


def _add_attack_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("attack")
    g.add_argument("--kind", dest="atk_kind",
                   choices=("large_weight", "parasite_chain", "splitting"))
    g.add_argument("--pa", dest="atk_pa", type=float)
    g.add_argument("--secret-period", dest="atk_secret_period", type=float)
    g.add_argument("--reveal-delay", dest="atk_reveal_delay", type=float)
    g.add_argument("--attack-start", dest="atk_attack_start", type=float)
    g.add_argument("--horizon", dest="atk_horizon", type=float)
    g.add_argument("--target", dest="atk_target", type=int)
    g.add_argument("--branching", dest="atk_branching", type=int)
    g.add_argument("--attack-confidence-k", dest="atk_confidence_k", type=int)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI config file")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./out)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tanglesim",
        description="DAG-ledger simulator: tip selection, attacks, metrics.")
    parser.add_argument("--version", action="version",
                        version=f"tanglesim {VERSION}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("run", help="simulate one scenario")
    _add_common(p)
    _add_scenario_flags(p)
    p.add_argument("--dot", action="store_true", help="also write tangle.dot")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("attack", help="run one attack scenario")
    _add_common(p)
    _add_scenario_flags(p)
    _add_attack_flags(p)
    p.add_argument("--dot", action="store_true", help="also write tangle.dot")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("compare", help="sweep TSAs x seeds")
    _add_common(p)
    _add_scenario_flags(p)
    p.add_argument("--tsas", help="comma-separated TSA list")
    p.add_argument("--seeds", help="seed list, e.g. '1,2,3'")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("confidence",
                       help="estimate per-transaction confidence on a snapshot")
    _add_common(p)
    _add_scenario_flags(p)
    p.add_argument("--snapshot", help="snapshot file to load")
    p.set_defaults(func=cmd_confidence)

    p = sub.add_parser("export", help="convert a snapshot to DOT")
    _add_common(p)
    p.add_argument("--snapshot", help="snapshot file to load")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.func(ns)
    except _CONFIG_ERRORS as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001 - CLI boundary
        print(f"unexpected failure: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
