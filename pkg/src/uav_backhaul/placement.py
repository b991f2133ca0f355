"""Shrink-and-realign random search over UAV horizontal positions."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .assoc import solve_association
from .geometry import Scenario
from .power import subgradient_solve
from .rates import rate_table, uniform_power

Objective = Callable[[Scenario], float]


SEARCH_NODE_BUDGET = 4


def association_value(scenario: Scenario, node_budget: int = SEARCH_NODE_BUDGET) -> float:
    """End-to-end value of the best association found at uniform power.

    When the backhaul caps bind, proving optimality can take exponentially
    many nodes; the small default budget keeps candidate scoring cheap and
    falls back to the greedy-plus-local-search incumbent.
    """
    rates = rate_table(scenario, uniform_power(scenario))
    res = solve_association(rates, scale=scenario.radio.rb_bandwidth, node_budget=node_budget)
    return float(res.rates.sum())


def pipeline_value(scenario: Scenario, node_budget: int = SEARCH_NODE_BUDGET) -> float:
    """Association at uniform power, then dual-optimal powers."""
    rates = rate_table(scenario, uniform_power(scenario))
    res = solve_association(rates, scale=scenario.radio.rb_bandwidth, node_budget=node_budget)
    alloc, _ = subgradient_solve(res.assoc, scenario)
    return float(alloc.rates.sum())


def evaluate_candidate_combination(positions, scenario: Scenario, objective: Objective = pipeline_value) -> float:
    """Objective with the UAVs moved to ``positions`` (``(L, 3)``)."""
    return objective(scenario.with_uavs(positions))


@dataclass
class PlacementConfig:
    candidates: int = 8
    r0: float = 250.0
    r_min: float = 1.0
    max_iter: int = 30
    min_rel_improvement: float = 1e-3
    joint: bool = False
    refine_candidates: bool = False

    def __post_init__(self):
        if self.candidates < 1:
            raise ValueError("need at least one candidate per UAV")
        if not self.r0 > self.r_min > 0:
            raise ValueError("need r0 > r_min > 0")
        if self.max_iter < 0:
            raise ValueError("max_iter must be >= 0")


@dataclass
class TraceRow:
    iteration: int
    radius: float
    objective: float
    positions: np.ndarray


@dataclass
class PlacementState:
    positions: np.ndarray
    radius: float
    iteration: int
    best: float
    candidates: int
    converged: bool = False
    evaluations: int = 0
    trace: list = field(default_factory=list)


def clamp_to_area(points, area):
    pts = np.array(points, dtype=float)
    pts[..., 0] = np.clip(pts[..., 0], 0.0, area[0])
    pts[..., 1] = np.clip(pts[..., 1], 0.0, area[1])
    return pts


def generate_candidates(state: PlacementState, area, rng: np.random.Generator) -> np.ndarray:
    """``(L, Q, 3)`` candidates: the current position first, then ``Q - 1``
    points at random angles on the circle of radius ``state.radius``.

    Clamping to the area can only pull a point closer to the centre.
    """
    pos = state.positions
    L, Q = len(pos), state.candidates
    angles = rng.uniform(0.0, 2 * math.pi, size=(L, Q - 1))
    cands = np.repeat(pos[:, None, :], Q, axis=1)
    cands[:, 1:, 0] += state.radius * np.cos(angles)
    cands[:, 1:, 1] += state.radius * np.sin(angles)
    return clamp_to_area(cands, area)


def _sequential_sweep(state, cands, scenario, objective):
    pos = state.positions.copy()
    best = state.best
    for l in range(len(pos)):
        choice = 0
        for q in range(1, cands.shape[1]):
            trial = pos.copy()
            trial[l] = cands[l, q]
            v = evaluate_candidate_combination(trial, scenario, objective)
            state.evaluations += 1
            if v > best:
                best, choice = v, q
        pos[l] = cands[l, choice]
    return pos, best


def _joint_sweep(state, cands, scenario, objective, limit=100_000):
    L, Q = cands.shape[:2]
    if Q**L > limit:
        raise ValueError(f"joint mode would evaluate {Q ** L} combinations")
    pos, best = state.positions.copy(), state.best
    for combo in itertools.product(range(Q), repeat=L):
        if not any(combo):
            continue
        trial = cands[np.arange(L), combo]
        v = evaluate_candidate_combination(trial, scenario, objective)
        state.evaluations += 1
        if v > best:
            best, pos = v, trial
    return pos, best


def optimize_placement(
    scenario: Scenario,
    config: PlacementConfig | None = None,
    rng: np.random.Generator | None = None,
    objective: Objective | None = None,
) -> PlacementState:
    """Recursive shrink-and-realign search.

    Each while-iteration draws candidates around every UAV, keeps a move only
    if it strictly raises the objective (UAV by UAV, or over all ``Q**L``
    combinations in joint mode) and halves the radius. The search stops once
    the radius has dropped below ``r_min`` and the last iteration improved
    by less than ``min_rel_improvement``, or after ``max_iter`` iterations.

    ``objective`` defaults to the uniform-power association value, or the
    full association-plus-power value with ``refine_candidates``.
    """
    cfg = config or PlacementConfig()
    if rng is None:
        rng = np.random.default_rng(0)
    if objective is None:
        objective = pipeline_value if cfg.refine_candidates else association_value
    pos = scenario.uavs.copy()
    state = PlacementState(
        positions=pos,
        radius=cfg.r0,
        iteration=0,
        best=evaluate_candidate_combination(pos, scenario, objective),
        candidates=cfg.candidates,
        evaluations=1,
    )
    state.trace.append(TraceRow(0, cfg.r0, state.best, pos.copy()))
    sweep = _joint_sweep if cfg.joint else _sequential_sweep
    while state.iteration < cfg.max_iter:
        if cfg.candidates == 1:
            state.converged = True
            break
        cands = generate_candidates(state, scenario.area, rng)
        prev = state.best
        state.positions, state.best = sweep(state, cands, scenario, objective)
        state.iteration += 1
        state.radius = cfg.r0 / 2**state.iteration
        state.trace.append(
            TraceRow(state.iteration, state.radius, state.best, state.positions.copy())
        )
        gain = (state.best - prev) / max(abs(prev), 1e-300)
        if gain < cfg.min_rel_improvement and state.radius < cfg.r_min:
            state.converged = True
            break
    return state


def write_trace(trace, path, extra=None):
    """Iteration trace as CSV: iteration, radius, objective, then x/y per UAV."""
    L = len(trace[0].positions)
    extra = extra or {}
    cols = list(extra) + ["iteration", "radius_m", "objective_bps"]
    cols += [f"{a}{l}" for l in range(L) for a in ("x", "y")]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in trace:
            xy = [repr(float(v)) for p in row.positions for v in p[:2]]
            w.writerow(
                [*extra.values(), row.iteration, repr(float(row.radius)), repr(float(row.objective)), *xy]
            )
