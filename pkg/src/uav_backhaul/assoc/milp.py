"""Binary MILP container, LP relaxation and best-first branch and bound."""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .simplex import LPResult, linprog_max

INT_TOL = 1e-7


@dataclass
class MilpInstance:
    """``max c @ x`` s.t. ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``0 <= x <= upper``.

    Variables flagged in ``integer`` are binary; their ``<= 1`` bound must be
    implied by the rows or given in ``upper``. ``layout`` maps block names to
    ``(slice, shape)`` for decoding; ``scale`` converts objective units to
    bit/s.
    """

    c: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    integer: np.ndarray
    upper: np.ndarray
    layout: dict = field(default_factory=dict)
    scale: float = 1.0
    row_labels: list = field(default_factory=list)

    @property
    def num_vars(self) -> int:
        return self.c.size

    @property
    def num_rows(self) -> int:
        return len(self.b_ub) + len(self.b_eq)

    def block(self, x, name):
        sl, shape = self.layout[name]
        return np.asarray(x)[sl].reshape(shape)


@dataclass(order=True)
class BnBNode:
    sort_key: tuple
    fixed: dict = field(compare=False)
    bound: float = field(compare=False)
    depth: int = field(compare=False)
    lp: LPResult = field(compare=False, repr=False)


@dataclass
class MilpResult:
    x: np.ndarray | None
    objective: float
    optimal: bool
    nodes: int
    bound: float
    status: str = "optimal"


def solve_lp(inst: MilpInstance, fixed: dict | None = None) -> LPResult:
    """LP relaxation of ``inst`` with some variables pinned to given values.

    Returned ``x`` is in the full variable space, fixed entries included.
    """
    n = inst.num_vars
    fixed = fixed or {}
    fix_idx = np.fromiter(fixed.keys(), dtype=int, count=len(fixed))
    fix_val = np.fromiter(fixed.values(), dtype=float, count=len(fixed))
    free = np.ones(n, dtype=bool)
    free[fix_idx] = False

    b_ub = inst.b_ub - inst.A_ub[:, fix_idx] @ fix_val
    b_eq = inst.b_eq - inst.A_eq[:, fix_idx] @ fix_val
    A_ub = inst.A_ub[:, free]
    A_eq = inst.A_eq[:, free]
    ub = inst.upper[free]
    bounded = np.flatnonzero(np.isfinite(ub))
    if bounded.size:
        rows = np.zeros((bounded.size, A_ub.shape[1]))
        rows[np.arange(bounded.size), bounded] = 1.0
        A_ub = np.vstack([A_ub, rows])
        b_ub = np.concatenate([b_ub, ub[bounded]])
    if np.any(fix_val < 0) or np.any(fix_val > inst.upper[fix_idx]):
        return LPResult("infeasible", None, -np.inf, 0)

    res = linprog_max(inst.c[free], A_ub, b_ub, A_eq, b_eq)
    if res.status != "optimal":
        return res
    x = np.zeros(n)
    x[free] = res.x
    x[fix_idx] = fix_val
    return LPResult("optimal", x, float(inst.c @ x), res.iterations)


def _branch_var(inst: MilpInstance, x: np.ndarray):
    """Most fractional binary; lowest index on ties. None if integral."""
    xi = x[inst.integer]
    frac = np.minimum(xi - np.floor(xi), np.ceil(xi) - xi)
    k = int(np.argmax(frac))
    if frac[k] <= INT_TOL:
        return None
    return int(np.flatnonzero(inst.integer)[k])


def _rounded(inst, x):
    x = x.copy()
    x[inst.integer] = np.round(x[inst.integer])
    return x


def solve_milp(
    inst: MilpInstance,
    gap_tol: float = 1e-6,
    node_budget: int = 100_000,
    incumbent: np.ndarray | None = None,
) -> MilpResult:
    """Best-first branch and bound over the binary variables.

    ``incumbent`` is an optional feasible point (not checked) used as the
    starting lower bound.

    Children are created down (0) before up (1) and solved eagerly; the
    search stops when the best open bound is within ``gap_tol`` of the
    incumbent (objective units) or ``node_budget`` LPs have been solved. In
    the latter case ``optimal`` is False and the incumbent (possibly None)
    is returned.
    """
    counter = itertools.count()
    root = solve_lp(inst)
    if root.status != "optimal":
        return MilpResult(None, -np.inf, True, 1, -np.inf, status="infeasible")
    nodes = 1
    inc_x, inc_obj = None, -np.inf
    if incumbent is not None:
        inc_x = np.asarray(incumbent, dtype=float)
        inc_obj = float(inst.c @ inc_x)

    def slack(v):
        return gap_tol + 1e-9 * max(1.0, abs(v))

    def consider(lp):
        nonlocal inc_x, inc_obj
        if _branch_var(inst, lp.x) is None and lp.objective > inc_obj:
            inc_x, inc_obj = _rounded(inst, lp.x), lp.objective
            return True
        return False

    if consider(root) or root.objective <= inc_obj + slack(inc_obj):
        return MilpResult(inc_x, inc_obj, True, nodes, root.objective)

    # rounding dive from the root for an early incumbent
    xr = root.x
    pin = {int(j): float(round(xr[j])) for j in np.flatnonzero(inst.integer)}
    dive = solve_lp(inst, pin)
    nodes += 1
    if dive.status == "optimal":
        consider(dive)

    heap = [BnBNode((-root.objective, next(counter)), {}, root.objective, 0, root)]
    while heap:
        node = heapq.heappop(heap)
        if node.bound <= inc_obj + slack(inc_obj):
            heap.clear()
            break
        j = _branch_var(inst, node.lp.x)
        for val in (0.0, 1.0):
            if nodes >= node_budget:
                heapq.heappush(heap, node)
                bound = max(n.bound for n in heap)
                return MilpResult(inc_x, inc_obj, False, nodes, bound)
            fixed = dict(node.fixed)
            fixed[j] = val
            lp = solve_lp(inst, fixed)
            nodes += 1
            if lp.status != "optimal":
                continue
            # child bound can exceed the parent's only through round-off
            bound = min(lp.objective, node.bound)
            if bound <= inc_obj + slack(inc_obj) or consider(lp):
                continue
            heapq.heappush(
                heap, BnBNode((-bound, next(counter)), fixed, bound, node.depth + 1, lp)
            )
    final_bound = max(inc_obj, max((n.bound for n in heap), default=-np.inf))
    if inc_x is None:
        return MilpResult(None, -np.inf, True, nodes, -np.inf, status="infeasible")
    return MilpResult(inc_x, inc_obj, True, nodes, final_bound)


def dump_milp(inst: MilpInstance, path: str | Path) -> None:
    """Plain-text dump, one record per line.

    ``obj`` lists objective coefficients, ``int`` the binary flags, ``ub`` the
    variable upper bounds and each ``row`` line is ``label sense rhs`` followed
    by sparse ``index:coef`` terms.
    """
    def fmt(v):
        return repr(float(v))

    lines = [f"milp {inst.num_vars} {inst.num_rows} scale={fmt(inst.scale)}"]
    lines.append("obj " + " ".join(fmt(v) for v in inst.c))
    lines.append("int " + " ".join("1" if v else "0" for v in inst.integer))
    lines.append("ub " + " ".join(fmt(v) for v in inst.upper))
    labels = list(inst.row_labels) or [f"r{i}" for i in range(inst.num_rows)]
    rows = [(a, b, "<=") for a, b in zip(inst.A_ub, inst.b_ub)]
    rows += [(a, b, "=") for a, b in zip(inst.A_eq, inst.b_eq)]
    for label, (a, b, sense) in zip(labels, rows):
        terms = " ".join(f"{j}:{fmt(a[j])}" for j in np.flatnonzero(a))
        lines.append(f"row {label} {sense} {fmt(b)} {terms}".rstrip())
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_milp(path: str | Path) -> MilpInstance:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    head = lines[0].split()
    n = int(head[1])
    scale = float(head[3].split("=")[1])
    c = np.array([float(v) for v in lines[1].split()[1:]])
    integer = np.array([v == "1" for v in lines[2].split()[1:]])
    upper = np.array([float(v) for v in lines[3].split()[1:]])
    ub_rows, eq_rows, labels = [], [], []
    for line in lines[4:]:
        parts = line.split()
        _, label, sense, rhs, *terms = parts
        a = np.zeros(n)
        for t in terms:
            j, v = t.split(":")
            a[int(j)] = float(v)
        (ub_rows if sense == "<=" else eq_rows).append((a, float(rhs)))
        labels.append(label)

    def stack(rows):
        if not rows:
            return np.zeros((0, n)), np.zeros(0)
        return np.array([r[0] for r in rows]), np.array([r[1] for r in rows])

    A_ub, b_ub = stack(ub_rows)
    A_eq, b_eq = stack(eq_rows)
    return MilpInstance(c, A_ub, b_ub, A_eq, b_eq, integer, upper, scale=scale, row_labels=labels)
