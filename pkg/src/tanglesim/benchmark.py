"""Backend benchmarks: compiled kernels against the pure-Python fallback.

    python -m tanglesim.benchmark [--nodes N] [--walks W] [--total T]

The micro section times the two hot kernels (biased walk step, cone
stamping) from both backend modules on one frozen tangle. The end-to-end
section runs a full scenario per backend in a subprocess, because the
backend choice happens at import time (TANGLESIM_PURE=1 forces the
fallback).
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from ._kernels import BACKEND
from .core import new_tangle
from .streams import substream


def _backends() -> dict:
    from ._kernels import pyfallback
    mods = {"python": pyfallback}
    try:
        from ._kernels import _accel
        mods["compiled"] = _accel
    except ImportError:
        pass
    return mods


def _uniform_tangle(n: int, seed: int = 7):
    """Random DAG: every tx approves two uniform earlier txs."""
    rng = substream(seed, 0)
    tangle = new_tangle()
    for i in range(1, n):
        a = int(rng.integers(0, i))
        b = int(rng.integers(0, i))
        tangle.attach((a, b), issue_time=float(i))
    return tangle


def _time_walks(mod, view, count: int, alpha: float, seed: int) -> float:
    rng = substream(seed, 1)
    head, nxt, child, cw = view.head, view.enext, view.echild, view.cw
    t0 = time.perf_counter()
    for _ in range(count):
        x = 0
        while True:
            x = mod.walk_step(head, nxt, child, cw, x, alpha, rng.random())
            if x < 0:
                break
    return time.perf_counter() - t0


def _time_cones(mod, tangle, sample: int, seed: int) -> float:
    rng = substream(seed, 2)
    n = tangle.n
    ids = rng.integers(1, n, size=sample)
    out = np.zeros(n, dtype=np.int64)
    stamp = np.zeros(n, dtype=np.int64)
    stack = np.zeros(n, dtype=np.int64)
    par1, par2, par3 = tangle._par1, tangle._par2, tangle._par3
    epoch = 0
    t0 = time.perf_counter()
    for x in ids:
        epoch += 1
        p = tangle.parents_of(int(x))
        s3 = p[2] if len(p) > 2 else -1
        mod.bump_cone(par1, par2, par3, p[0], p[1], s3, out, stamp, stack,
                      epoch)
    return time.perf_counter() - t0


def bench_micro(nodes: int, walks: int, cones: int, seed: int = 7
                ) -> list[tuple[str, str, float]]:
    tangle = _uniform_tangle(nodes, seed)
    view = tangle.full_view()
    rows = []
    for name, mod in _backends().items():
        rows.append((name, f"walk x{walks}",
                     _time_walks(mod, view, walks, 5.0, seed)))
        rows.append((name, f"cone x{cones}",
                     _time_cones(mod, tangle, cones, seed)))
    return rows


_E2E_SNIPPET = """\
from tanglesim.engine import ScenarioConfig, run
from tanglesim._kernels import BACKEND
r = run(ScenarioConfig(tsa="iota", tps=500.0, total={total}, seed=1))
print(BACKEND, repr(r.wall_s))
"""


def bench_e2e(total: int) -> list[tuple[str, float]]:
    rows = []
    for pure in ("", "1"):
        env = dict(os.environ)
        if pure:
            env["TANGLESIM_PURE"] = "1"
        else:
            env.pop("TANGLESIM_PURE", None)
        proc = subprocess.run(
            [sys.executable, "-c", _E2E_SNIPPET.format(total=total)],
            capture_output=True, text=True, env=env, check=True)
        name, wall = proc.stdout.split()
        rows.append((name, float(wall)))
    return rows


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="tanglesim.benchmark",
        description="compare kernel backends (micro + end-to-end)")
    ap.add_argument("--nodes", type=int, default=2500)
    ap.add_argument("--walks", type=int, default=5000)
    ap.add_argument("--cones", type=int, default=300)
    ap.add_argument("--total", type=int, default=2000,
                    help="end-to-end scenario size")
    ap.add_argument("--skip-e2e", action="store_true")
    ns = ap.parse_args(argv)

    print(f"active backend: {BACKEND}")
    micro = bench_micro(ns.nodes, ns.walks, ns.cones)
    print(f"\nmicro ({ns.nodes} nodes):")
    for name, what, secs in micro:
        print(f"  {name:<9} {what:<12} {secs * 1e3:9.2f} ms")
    by_task: dict[str, dict[str, float]] = {}
    for name, what, secs in micro:
        by_task.setdefault(what, {})[name] = secs
    for what, vals in by_task.items():
        if "compiled" in vals and "python" in vals and vals["compiled"] > 0:
            print(f"  speedup   {what:<12} {vals['python'] / vals['compiled']:9.1f}x")

    if not ns.skip_e2e:
        print(f"\nend-to-end (total={ns.total}):")
        for name, wall in bench_e2e(ns.total):
            print(f"  {name:<9} {wall:9.3f} s")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
