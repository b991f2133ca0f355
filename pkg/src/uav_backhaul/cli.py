"""Command line entry point: ``uav-backhaul <subcommand> [flags]``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError
from .geometry import ScenarioConfig, derive_seed, generate_scenario, substream
from .harness import (
    STRATEGIES,
    ExperimentSpec,
    StrategyError,
    _map,
    atomic_write,
    csv_text,
    emit_outputs,
    read_config_file,
    run_strategies,
    sweep,
)
from .placement import PlacementConfig, optimize_placement

POWER_VALUES = (20.0, 25.0, 30.0, 35.0, 40.0)
BANDWIDTH_VALUES = (0.25e6, 0.5e6, 1e6, 2e6, 4e6)


def _values(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML scenario file (optional placement: section)")
    common.add_argument("--seed", type=_seed, default=0, help="master seed (default 0)")
    common.add_argument("--trials", type=int, default=None, help="Monte Carlo drops per sweep point")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory (default ./out)")
    common.add_argument(
        "--strategy",
        action="append",
        choices=STRATEGIES,
        help="strategy to run; repeat for several (default depends on the subcommand)",
    )
    common.add_argument("--workers", type=int, default=None, help="worker processes (default: CPU count)")

    p = argparse.ArgumentParser(prog="uav-backhaul", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="all strategies on one drop")
    sp = sub.add_parser("sweep-power", parents=[common], help="objective versus UAV peak power")
    sp.add_argument("--values", type=_values, default=POWER_VALUES, help="peak powers in dBm")
    sb = sub.add_parser("sweep-bandwidth", parents=[common], help="objective versus backhaul bandwidth")
    sb.add_argument("--values", type=_values, default=BANDWIDTH_VALUES, help="backhaul bandwidths in Hz")
    sub.add_parser("convergence", parents=[common], help="placement search trace per drop")
    sub.add_parser("snapshot", parents=[common], help="positions and association of one drop")
    sv = sub.add_parser("verify", parents=[common], help="oracle cross-checks")
    sv.add_argument("--scale", type=float, default=1.0, help="multiplier on the instance counts")
    return p


def _load(args) -> tuple[ScenarioConfig, PlacementConfig]:
    if args.config is None:
        return ScenarioConfig(), PlacementConfig()
    return read_config_file(args.config)


def _workers(args):
    if args.workers is not None and args.workers < 1:
        raise ConfigError("--workers must be >= 1")
    return args.workers or os.cpu_count() or 1


def _write_rows(path: Path, columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in (r[c] for c in columns)])
    atomic_write(path, buf.getvalue())


def _json(path: Path, data):
    atomic_write(path, json.dumps(data, indent=2, sort_keys=True, default=_plain) + "\n")


def _plain(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.generic):
        return v.item()
    raise TypeError(type(v))


def cmd_run(args) -> int:
    cfg, pcfg = _load(args)
    strategies = tuple(args.strategy or STRATEGIES)
    sc = generate_scenario(cfg, args.seed)
    t0 = time.perf_counter()
    results = run_strategies(sc, strategies, pcfg)
    wall = (time.perf_counter() - t0) * 1e3 / len(results)
    rows, detail = [], {}
    for name in strategies:
        r = results[name]
        rows.append(
            {
                "sweep_var": "none",
                "sweep_value": "",
                "trial": 0,
                "seed": args.seed,
                "strategy": name,
                "objective_bps": r.value.total,
                "iterations": r.placement.iteration,
                "wall_ms": round(wall, 3),
            }
        )
        detail[name] = {
            "objective_bps": r.value.total,
            "per_uav_bps": r.value.per_uav,
            "access_sum_bps": r.value.access_sum,
            "backhaul_bps": r.value.backhaul,
            "uav_positions": r.placement.positions,
            "iterations": r.placement.iteration,
            "converged": r.placement.converged,
        }
        print(f"{name:28s} {r.value.total / 1e6:10.3f} Mbit/s  ({r.placement.iteration} iterations)")
    args.out.mkdir(parents=True, exist_ok=True)
    atomic_write(args.out / "run.csv", csv_text(rows))
    _json(args.out / "run.json", {"seed": args.seed, "config": cfg.to_dict(), "version": __version__, "results": detail})
    return 0


def _cmd_sweep(args, var) -> int:
    cfg, pcfg = _load(args)
    spec = ExperimentSpec(
        config=cfg,
        sweep_var=var,
        values=args.values,
        strategies=tuple(args.strategy or STRATEGIES),
        trials=args.trials or 50,
        seed=args.seed,
        placement=pcfg,
    )
    record = sweep(spec, workers=_workers(args))
    stem = "sweep_power" if var == "peak_power_dbm" else "sweep_bandwidth"
    csv_path, json_path = emit_outputs(record, args.out, stem)
    for row in record.summary():
        print(
            f"{var}={row['sweep_value']:<12g} {row['strategy']:28s} "
            f"{row['mean_bps'] / 1e6:9.3f} +- {row['stderr_bps'] / 1e6:.3f} Mbit/s"
        )
    print(f"wrote {csv_path} and {json_path}")
    return 0


def _trace_task(args):
    cfg_dict, pcfg_dict, seed = args
    sc = generate_scenario(ScenarioConfig.from_dict(cfg_dict), seed)
    state = optimize_placement(sc, PlacementConfig(**pcfg_dict), rng=substream(seed, "placement"))
    return state


def cmd_convergence(args) -> int:
    cfg, pcfg = _load(args)
    trials = args.trials or 20
    # same per-trial seeds as the sweeps
    seeds = [derive_seed(args.seed, "trials", t) % 2**63 for t in range(trials)]
    tasks = [(cfg.to_dict(), dataclasses.asdict(pcfg), s) for s in seeds]
    states = _map(_trace_task, tasks, _workers(args))
    L = cfg.num_uavs
    cols = ["trial", "seed", "iteration", "radius_m", "objective_bps"]
    cols += [f"{a}{l}" for l in range(L) for a in ("x", "y")]
    rows = []
    for t, (s, state) in enumerate(zip(seeds, states)):
        for tr in state.trace:
            row = {"trial": t, "seed": s, "iteration": tr.iteration, "radius_m": float(tr.radius), "objective_bps": float(tr.objective)}
            for l, p in enumerate(tr.positions):
                row[f"x{l}"], row[f"y{l}"] = float(p[0]), float(p[1])
            rows.append(row)
        print(f"trial {t}: {state.iteration} iterations, converged={state.converged}, {state.best / 1e6:.3f} Mbit/s")
    args.out.mkdir(parents=True, exist_ok=True)
    _write_rows(args.out / "convergence.csv", cols, rows)
    return 0


SNAPSHOT_COLUMNS = ["node", "index", "x", "y", "z", "serving_uav", "rb", "tb", "power_w"]


def cmd_snapshot(args) -> int:
    cfg, pcfg = _load(args)
    strategy = (args.strategy or ["proposed"])[0]
    sc = generate_scenario(cfg, args.seed)
    r = run_strategies(sc, (strategy,), pcfg)[strategy]
    rows = []
    for m, p in enumerate(sc.tbs):
        rows.append({"node": "tb", "index": m, "x": p[0], "y": p[1], "z": p[2], "serving_uav": "", "rb": "", "tb": "", "power_w": ""})
    tb_of = np.argmax(r.assoc.theta, axis=0)
    for l, p in enumerate(r.placement.positions):
        rows.append(
            {"node": "uav", "index": l, "x": p[0], "y": p[1], "z": p[2], "serving_uav": "", "rb": "", "tb": int(tb_of[l]), "power_w": ""}
        )
    for u, p in enumerate(sc.users):
        hit = np.argwhere(r.assoc.eps[:, u, :])
        if hit.size:
            l, n = map(int, hit[0])
            extra = {"serving_uav": l, "rb": n, "power_w": float(r.power.power[l, u, n])}
        else:
            extra = {"serving_uav": -1, "rb": -1, "power_w": 0.0}
        rows.append({"node": "user", "index": u, "x": p[0], "y": p[1], "z": p[2], "tb": "", **extra})
    for row in rows:
        for k in ("x", "y", "z"):
            row[k] = float(row[k])
    args.out.mkdir(parents=True, exist_ok=True)
    _write_rows(args.out / "snapshot.csv", SNAPSHOT_COLUMNS, rows)
    print(f"{strategy}: {r.value.total / 1e6:.3f} Mbit/s, {int(r.assoc.eps.sum())} users served")
    return 0


def cmd_verify(args) -> int:
    from .verify import run_suite

    reports = run_suite(args.seed, args.scale)
    cols = ["check", "instance", "oracle", "candidate", "abs_gap", "rel_gap", "passed"]
    args.out.mkdir(parents=True, exist_ok=True)
    _write_rows(args.out / "verify.csv", cols, [r.row() for r in reports])
    failed = [r for r in reports if not r.passed]
    checks = sorted({r.check for r in reports})
    for c in checks:
        rs = [r for r in reports if r.check == c]
        bad = sum(not r.passed for r in rs)
        worst = max(r.rel_gap for r in rs)
        print(f"{'FAIL' if bad else 'ok  '} {c:22s} {len(rs) - bad}/{len(rs)}  max rel gap {worst:.3g}")
    if failed:
        print(f"{len(failed)} oracle checks failed", file=sys.stderr)
        return 1
    return 0


COMMANDS = {
    "run": cmd_run,
    "sweep-power": lambda a: _cmd_sweep(a, "peak_power_dbm"),
    "sweep-bandwidth": lambda a: _cmd_sweep(a, "backhaul_bandwidth_hz"),
    "convergence": cmd_convergence,
    "snapshot": cmd_snapshot,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.trials is not None and args.trials < 1:
            raise ConfigError("--trials must be >= 1")
        return COMMANDS[args.command](args)
    except (ConfigError, StrategyError, ValueError, OSError) as exc:
        print(f"uav-backhaul {args.command}: error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())
