"""Strategies, Monte Carlo sweeps and result files."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .assoc import best_backhaul, solve_association
from .errors import ConfigError
from .geometry import ScenarioConfig, Scenario, derive_seed, generate_scenario, substream
from .model import Association, EndToEndValue, PowerAllocation
from .placement import PlacementConfig, PlacementState, optimize_placement
from .power import subgradient_solve, uniform_allocation
from .rates import backhaul_rate_matrix, end_to_end, rate_table, uniform_power

# node budget for the association at the final positions of each drop
FINAL_NODE_BUDGET = 2000
STRATEGIES = ("proposed", "assoc_uniform_power", "random_assoc_uniform_power")
SWEEP_VARS = {"peak_power_dbm": "peak_power_dbm", "backhaul_bandwidth_hz": "backhaul_bandwidth_hz"}
CSV_COLUMNS = [
    "sweep_var",
    "sweep_value",
    "trial",
    "seed",
    "strategy",
    "objective_bps",
    "iterations",
    "wall_ms",
]


class StrategyError(RuntimeError):
    pass


@dataclass
class StrategyResult:
    strategy: str
    value: EndToEndValue
    assoc: Association
    power: PowerAllocation
    placement: PlacementState


def random_association(scenario: Scenario, rng: np.random.Generator) -> np.ndarray:
    """Users in index order draw a (UAV, RB) pair uniformly, redrawing while the RB is taken."""
    L, U, N = scenario.num_uavs, scenario.num_users, scenario.num_rbs
    eps = np.zeros((L, U, N), dtype=np.int8)
    taken = np.zeros(N, dtype=bool)
    for u in range(U):
        if taken.all():
            break
        while True:
            l, n = int(rng.integers(L)), int(rng.integers(N))
            if not taken[n]:
                break
        taken[n] = True
        eps[l, u, n] = 1
    return eps


def _fixed_eps_value(eps):
    def value(scenario: Scenario) -> float:
        rates = rate_table(scenario, uniform_power(scenario))
        assoc = Association(eps, best_backhaul(rates))
        return end_to_end(assoc, rates).total

    return value


def _placement(scenario, cfg, objective=None):
    rng = substream(scenario.seed, "placement")
    return optimize_placement(scenario, cfg, rng=rng, objective=objective)


def run_strategies(scenario: Scenario, strategies=STRATEGIES, placement: PlacementConfig | None = None):
    """Run several strategies on one drop.

    ``proposed`` and ``assoc_uniform_power`` search placement with the same
    objective and random stream, so they share one search and differ only in
    the final power step.
    """
    cfg = placement or PlacementConfig()
    out = {}
    shared = None
    for name in strategies:
        if name not in STRATEGIES:
            raise StrategyError(f"unknown strategy {name!r}")
        try:
            if name in ("proposed", "assoc_uniform_power"):
                if shared is None:
                    state = _placement(scenario, cfg)
                    placed = scenario.with_uavs(state.positions)
                    rates = rate_table(placed, uniform_power(placed))
                    res = solve_association(
                        rates, scale=placed.radio.rb_bandwidth, node_budget=FINAL_NODE_BUDGET
                    )
                    shared = (state, placed, res.assoc)
                state, placed, assoc = shared
                if name == "proposed":
                    alloc, _ = subgradient_solve(assoc, placed)
                else:
                    alloc = uniform_allocation(assoc, placed)
            else:
                eps = random_association(scenario, substream(scenario.seed, "benchmark"))
                state = _placement(scenario, cfg, objective=_fixed_eps_value(eps))
                placed = scenario.with_uavs(state.positions)
                theta = best_backhaul(rate_table(placed, uniform_power(placed)))
                assoc = Association(eps, theta)
                alloc = uniform_allocation(assoc, placed)
            rates = rate_table(placed, alloc.power)
            value = end_to_end(assoc, rates, alloc, placed.peak_power)
        except StrategyError:
            raise
        except Exception as exc:
            raise StrategyError(f"strategy {name}: {exc}") from exc
        out[name] = StrategyResult(name, value, assoc, alloc, state)
    return out


def run_strategy(scenario: Scenario, strategy: str, placement: PlacementConfig | None = None) -> StrategyResult:
    return run_strategies(scenario, (strategy,), placement)[strategy]


@dataclass
class ExperimentSpec:
    config: ScenarioConfig
    sweep_var: str
    values: tuple
    strategies: tuple = ("proposed",)
    trials: int = 50
    seed: int = 0
    placement: PlacementConfig = field(default_factory=PlacementConfig)

    def __post_init__(self):
        if self.sweep_var not in SWEEP_VARS:
            raise ConfigError(f"unknown sweep variable {self.sweep_var!r}")
        self.values = tuple(float(v) for v in self.values)
        if not self.values or any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ConfigError("sweep values must be non-empty and strictly increasing")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        self.strategies = tuple(self.strategies)
        for s in self.strategies:
            if s not in STRATEGIES:
                raise ConfigError(f"unknown strategy {s!r}")

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "sweep_var": self.sweep_var,
            "values": list(self.values),
            "strategies": list(self.strategies),
            "trials": self.trials,
            "seed": self.seed,
            "placement": dataclasses.asdict(self.placement),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        return cls(
            config=ScenarioConfig.from_dict(d["config"]),
            sweep_var=d["sweep_var"],
            values=tuple(d["values"]),
            strategies=tuple(d["strategies"]),
            trials=int(d["trials"]),
            seed=int(d["seed"]),
            placement=PlacementConfig(**d.get("placement", {})),
        )

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def trial_seed(self, trial: int) -> int:
        return derive_seed(self.seed, "trials", trial) % 2**63


@dataclass
class RunRecord:
    spec: ExperimentSpec
    spec_hash: str
    rows: list
    wall_s: float
    version: str = __version__

    def summary(self) -> list[dict]:
        out = []
        for v in self.spec.values:
            for s in self.spec.strategies:
                vals = [r["objective_bps"] for r in self.rows if r["sweep_value"] == v and r["strategy"] == s]
                mean = float(np.mean(vals))
                se = float(np.std(vals, ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
                out.append({"sweep_value": v, "strategy": s, "mean_bps": mean, "stderr_bps": se, "n": len(vals)})
        return out

    def means(self, strategy: str) -> np.ndarray:
        return np.array([s["mean_bps"] for s in self.summary() if s["strategy"] == strategy])


def _run_task(args):
    spec_dict, value, trial = args
    spec = ExperimentSpec.from_dict(spec_dict)
    seed = spec.trial_seed(trial)
    cfg = spec.config.replace(**{SWEEP_VARS[spec.sweep_var]: value})
    scenario = generate_scenario(cfg, seed)
    rows = []
    t0 = time.perf_counter()
    results = run_strategies(scenario, spec.strategies, spec.placement)
    wall = (time.perf_counter() - t0) * 1e3 / len(results)
    for name in spec.strategies:
        r = results[name]
        rows.append(
            {
                "sweep_var": spec.sweep_var,
                "sweep_value": value,
                "trial": trial,
                "seed": seed,
                "strategy": name,
                "objective_bps": r.value.total,
                "iterations": r.placement.iteration,
                "wall_ms": round(wall, 3),
            }
        )
    return rows


def _map(fn, tasks, workers):
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=1))


def sweep(spec: ExperimentSpec, workers: int | None = 1) -> RunRecord:
    """Every (sweep value, trial) pair, reduced in index order.

    Trial ``t`` uses the same derived seed at every sweep value, so users
    and fading are shared across the sweep.
    """
    t0 = time.perf_counter()
    d = spec.to_dict()
    tasks = [(d, v, t) for v in spec.values for t in range(spec.trials)]
    rows = [row for chunk in _map(_run_task, tasks, workers) for row in chunk]
    return RunRecord(spec, spec.hash(), rows, time.perf_counter() - t0)


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_outputs(record: RunRecord, out_dir, stem: str = "sweep") -> tuple[Path, Path]:
    """Write ``<stem>.csv`` and ``<stem>.json`` (spec, hash, seed, summary)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{stem}.csv"
    json_path = out / f"{stem}.json"
    summary = {
        "spec_hash": record.spec_hash,
        "seed": record.spec.seed,
        "version": record.version,
        "spec": record.spec.to_dict(),
        "summary": record.summary(),
        "wall_s": round(record.wall_s, 3),
    }
    atomic_write(csv_path, csv_text(record.rows))
    atomic_write(json_path, json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return csv_path, json_path


def spec_from_summary(path) -> ExperimentSpec:
    return ExperimentSpec.from_dict(json.loads(Path(path).read_text(encoding="utf-8"))["spec"])


def read_config_file(path) -> tuple[ScenarioConfig, PlacementConfig]:
    """YAML scenario file; an optional ``placement:`` mapping tunes the search."""
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping")
    placement = data.pop("placement", None) or {}
    try:
        pcfg = PlacementConfig(**placement)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad placement settings: {exc}") from None
    return ScenarioConfig.from_dict(data), pcfg
