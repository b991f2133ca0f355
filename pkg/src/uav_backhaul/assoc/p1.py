"""Association subproblem for fixed powers and fixed UAV positions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import StructureError
from ..model import Association, RateTable
from .milp import MilpInstance, solve_milp


def best_backhaul(rates: RateTable) -> np.ndarray:
    """``theta[m, l] = 1`` for the TB with the highest backhaul rate (lowest index on ties)."""
    M, L = rates.backhaul.shape
    theta = np.zeros((M, L), dtype=np.int8)
    theta[np.argmax(rates.backhaul, axis=0), np.arange(L)] = 1
    return theta


def build_p1_milp(rates: RateTable, theta=None, aggregate_rbs: bool = False, scale=None) -> MilpInstance:
    """Linearized association problem as a binary MILP.

    Variables are ``eps[l, u, n]``, ``theta[m, l]`` and the per-UAV rates
    ``R[l]``; the objective is ``sum(R)``. Rows, in order: served access rate
    ``>= R[l]`` per UAV, backhaul rate ``>= R[l]`` per UAV, one slot per user,
    one user per RB, and (as equalities) one TB per UAV.

    With ``theta`` given the backhaul map is fixed: the ``theta`` block and
    the equality rows vanish and each backhaul row becomes a bound on
    ``R[l]``. With ``aggregate_rbs`` (allowed only when access rates do not
    depend on the RB) a single ``x[l, u]`` replaces the RB dimension and the
    per-RB rows collapse into one row capping the number of served links at
    ``N``. Rates are divided by ``scale`` (default: the largest rate in the table).
    """
    access = np.asarray(rates.access, dtype=float)
    backhaul = np.asarray(rates.backhaul, dtype=float)
    if access.ndim != 3 or backhaul.ndim != 2 or backhaul.shape[1] != access.shape[0]:
        raise StructureError(
            f"access {access.shape} and backhaul {backhaul.shape} do not describe one network"
        )
    L, U, N = access.shape
    M = backhaul.shape[0]
    if scale is None:
        scale = float(max(access.max(), backhaul.max(), 1e-300))
    a = access / scale
    bh = backhaul / scale

    if aggregate_rbs:
        if not np.allclose(a, a[:, :, :1], rtol=1e-12, atol=0):
            raise StructureError("RB aggregation needs RB-independent access rates")
        a_blk = a[:, :, 0]
        eps_shape = (L, U)
    else:
        a_blk = a
        eps_shape = (L, U, N)
    n_eps = int(np.prod(eps_shape))
    n_theta = 0 if theta is not None else M * L
    n = n_eps + n_theta + L
    eps_sl = slice(0, n_eps)
    theta_sl = slice(n_eps, n_eps + n_theta)
    r_sl = slice(n_eps + n_theta, n)
    r_idx = np.arange(r_sl.start, r_sl.stop)
    eps_idx = np.arange(n_eps).reshape(eps_shape)

    rows, rhs, labels = [], [], []

    def new_row():
        rows.append(np.zeros(n))
        return rows[-1]

    for l in range(L):
        row = new_row()
        row[r_idx[l]] = 1.0
        row[eps_idx[l].ravel()] = -a_blk[l].ravel()
        rhs.append(0.0)
        labels.append(f"access_min[{l}]")

    upper = np.full(n, np.inf)
    if theta is None:
        theta_idx = n_eps + np.arange(M * L).reshape(M, L)
        for l in range(L):
            row = new_row()
            row[r_idx[l]] = 1.0
            row[theta_idx[:, l]] = -bh[:, l]
            rhs.append(0.0)
            labels.append(f"backhaul_min[{l}]")
        upper[r_sl] = bh.max(axis=0)
    else:
        theta = np.asarray(theta)
        if theta.shape != (M, L):
            raise StructureError(f"theta shape {theta.shape} != {(M, L)}")
        upper[r_sl] = (theta * bh).sum(axis=0)

    for u in range(U):
        row = new_row()
        row[eps_idx[:, u].ravel()] = 1.0
        rhs.append(1.0)
        labels.append(f"user[{u}]")
    if aggregate_rbs:
        row = new_row()
        row[eps_sl] = 1.0
        rhs.append(float(N))
        labels.append("rb_count")
    else:
        for k in range(N):
            row = new_row()
            row[eps_idx[:, :, k].ravel()] = 1.0
            rhs.append(1.0)
            labels.append(f"rb[{k}]")

    eq_rows, eq_rhs = [], []
    if theta is None:
        for l in range(L):
            row = np.zeros(n)
            row[theta_idx[:, l]] = 1.0
            eq_rows.append(row)
            eq_rhs.append(1.0)
            labels.append(f"one_tb[{l}]")

    c = np.zeros(n)
    c[r_sl] = 1.0
    integer = np.zeros(n, dtype=bool)
    integer[: n_eps + n_theta] = True
    layout = {"eps": (eps_sl, eps_shape), "R": (r_sl, (L,))}
    if theta is None:
        layout["theta"] = (theta_sl, (M, L))
    return MilpInstance(
        c=c,
        A_ub=np.array(rows),
        b_ub=np.array(rhs),
        A_eq=np.array(eq_rows).reshape(-1, n),
        b_eq=np.array(eq_rhs),
        integer=integer,
        upper=upper,
        layout=layout,
        scale=scale,
        row_labels=labels,
    )


def greedy_links(access, cap, N):
    """Greedy ``x[l, u]`` for RB-flat rates: repeatedly add the link with the
    largest gain in ``min(served, cap)`` until gains vanish or ``N`` links exist.
    """
    access = np.asarray(access, dtype=float)
    L, U = access.shape
    x = np.zeros((L, U), dtype=np.int8)
    served = np.zeros(L)
    free = np.ones(U, dtype=bool)
    for _ in range(min(N, U)):
        gain = np.minimum(served[:, None] + access, cap[:, None]) - np.minimum(served, cap)[:, None]
        gain[:, ~free] = -1.0
        k = int(np.argmax(gain))
        l, u = divmod(k, U)
        if gain[l, u] <= 0:
            break
        x[l, u] = 1
        served[l] += access[l, u]
        free[u] = False
    return x


def _capped(served, cap):
    return np.minimum(served, cap).sum(axis=-1)


def polish_links(x, access, cap, N, max_rounds=200):
    """Best-improvement local search on ``x[l, u]``: move one user (to another
    UAV, into or out of service) or swap the UAVs of two users.
    """
    access = np.asarray(access, dtype=float)
    L, U = access.shape
    x = np.array(x, dtype=np.int8)
    # one extra row for "not served" with zero rate and no cap
    a = np.vstack([access, np.zeros((1, U))])
    c = np.append(cap, np.inf)
    where = np.full(U, L)
    l_idx, u_idx = np.nonzero(x)
    where[u_idx] = l_idx
    served = np.append((x * access).sum(axis=1), 0.0)
    best = _capped(served[:L], cap)
    cols = np.arange(U)
    for _ in range(max_rounds):
        # relocations: user u from where[u] to target t
        cand = np.broadcast_to(served, (U, L + 1, L + 1)).copy()
        t = np.arange(L + 1)
        cand[cols, :, where] -= a[where, cols][:, None]
        cand[:, t, t] += a.T
        val = _capped(np.minimum(cand[..., :L], c[:L]), cap)
        val[cols, where] = -np.inf
        if x.sum() >= N:
            val[where == L, :L] = -np.inf
        mv = np.unravel_index(int(np.argmax(val)), val.shape)
        # swaps: users u, w exchange places
        wu, ww = where[:, None], where[None, :]
        sw = np.broadcast_to(served, (U, U, L + 1)).copy()
        ii, jj = np.meshgrid(cols, cols, indexing="ij")
        sw[ii, jj, wu] += a[wu, jj] - a[wu, ii]
        sw[ii, jj, ww] += a[ww, ii] - a[ww, jj]
        sval = _capped(sw[..., :L], cap)
        sval[wu == ww] = -np.inf
        sv = np.unravel_index(int(np.argmax(sval)), sval.shape)
        gain_mv, gain_sw = val[mv] - best, sval[sv] - best
        tol = 1e-12 * max(best, 1.0)
        if max(gain_mv, gain_sw) <= tol:
            break
        if gain_mv >= gain_sw:
            u, dst = mv
            served[where[u]] -= a[where[u], u]
            served[dst] += a[dst, u]
            where[u] = dst
        else:
            u, w = sv
            lu, lw = where[u], where[w]
            served[lu] += a[lu, w] - a[lu, u]
            served[lw] += a[lw, u] - a[lw, w]
            where[u], where[w] = lw, lu
        best = _capped(served[:L], cap)
    out = np.zeros((L, U), dtype=np.int8)
    on = where < L
    out[where[on], cols[on]] = 1
    return out


def _greedy_start(inst: MilpInstance, rates: RateTable, theta, N):
    a = np.asarray(rates.access, dtype=float)[:, :, 0]
    cap = (theta * rates.backhaul).sum(axis=0)
    x = polish_links(greedy_links(a, cap, N), a, cap, N)
    start = np.zeros(inst.num_vars)
    start[inst.layout["eps"][0]] = x.ravel()
    start[inst.layout["R"][0]] = np.minimum((x * a).sum(axis=1), cap) / inst.scale
    return start


@dataclass
class AssociationResult:
    assoc: Association
    rates: np.ndarray  # per-UAV R_l, bit/s
    optimal: bool
    nodes: int


def _decode(inst: MilpInstance, x, theta, N) -> Association:
    eps = np.round(inst.block(x, "eps")).astype(np.int8)
    if eps.ndim == 2:
        # hand out RBs in (UAV, user) order
        L, U = eps.shape
        full = np.zeros((L, U, N), dtype=np.int8)
        l_idx, u_idx = np.nonzero(eps)
        full[l_idx, u_idx, np.arange(l_idx.size)] = 1
        eps = full
    if theta is None:
        theta = np.round(inst.block(x, "theta")).astype(np.int8)
    return Association(eps, theta)


def solve_association(
    rates: RateTable,
    fix_backhaul: bool = True,
    aggregate_rbs: bool | None = None,
    gap_tol: float = 1e-6,
    node_budget: int = 100_000,
    scale: float | None = None,
) -> AssociationResult:
    """Optimal ``(eps, theta)`` for the given rate table.

    ``fix_backhaul`` pins ``theta`` to :func:`best_backhaul`, which loses
    nothing because ``theta`` only enters through each UAV's own backhaul
    cap. ``aggregate_rbs=None`` aggregates automatically when access rates
    are RB-independent. ``gap_tol`` is absolute in objective units, i.e. bit/s
    divided by ``scale`` (pass the RB bandwidth to match the defaults).
    """
    access = np.asarray(rates.access)
    L, U, N = access.shape
    theta = best_backhaul(rates) if fix_backhaul else None
    if aggregate_rbs is None:
        aggregate_rbs = bool(np.all(access == access[:, :, :1]))
    inst = build_p1_milp(rates, theta=theta, aggregate_rbs=aggregate_rbs, scale=scale)
    start = None
    if aggregate_rbs and theta is not None:
        # a good incumbent lets BnB stop at the root when the backhaul binds
        start = _greedy_start(inst, rates, theta, N)
    res = solve_milp(inst, gap_tol=gap_tol, node_budget=node_budget, incumbent=start)
    if res.x is None:
        # cannot happen for P1: the empty association is feasible
        raise RuntimeError("association MILP returned no solution")
    assoc = _decode(inst, res.x, theta, N)
    served = (assoc.eps * access).sum(axis=(1, 2))
    cap = (assoc.theta * rates.backhaul).sum(axis=0)
    return AssociationResult(assoc, np.minimum(served, cap), res.optimal, res.nodes)
