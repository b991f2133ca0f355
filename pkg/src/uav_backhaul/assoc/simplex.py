"""Dense two-phase revised simplex.

Solves ``max c @ x`` subject to ``A_ub @ x <= b_ub``, ``A_eq @ x == b_eq`` and
``x >= 0``. The basis inverse is kept explicitly and updated with elementary
row operations, refactorized periodically. Pricing is Dantzig's largest
reduced cost; after a run of degenerate pivots it switches to Bland's rule,
which cannot cycle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import UnboundedError

TOL = 1e-9
REFACTOR_EVERY = 64
DEGENERATE_SWITCH = 30


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible"
    x: np.ndarray | None
    objective: float
    iterations: int
    certificate: np.ndarray | None = None  # Farkas ray over (ub rows, eq rows)


class _Tableau:
    """Standard-form data ``A x = b``, ``x >= 0`` with an explicit basis inverse."""

    def __init__(self, A, b, basis):
        self.A = A
        self.b = b
        self.basis = np.array(basis)
        self.refactor()

    def refactor(self):
        self.Binv = np.linalg.inv(self.A[:, self.basis])
        self.xB = self.Binv @ self.b
        self.xB[np.abs(self.xB) < TOL] = 0.0
        self.since_refactor = 0

    def pivot(self, r, j, col):
        piv = col[r]
        row = self.Binv[r] / piv
        t = self.xB[r] / piv
        self.Binv -= np.outer(col, row)
        self.Binv[r] = row
        self.xB -= t * col
        self.xB[r] = t
        self.xB[np.abs(self.xB) < TOL] = 0.0
        self.basis[r] = j
        self.since_refactor += 1
        if self.since_refactor >= REFACTOR_EVERY:
            self.refactor()

    def run(self, c, max_iter):
        """Primal simplex from the current feasible basis; returns iterations."""
        degenerate = 0
        it = 0
        while it < max_iter:
            d = c - (c[self.basis] @ self.Binv) @ self.A
            d[self.basis] = 0.0
            if degenerate < DEGENERATE_SWITCH:
                j = int(d.argmax())
                if d[j] <= TOL:
                    return it
            else:
                cand = np.flatnonzero(d > TOL)
                if cand.size == 0:
                    return it
                j = int(cand[0])
            col = self.Binv @ self.A[:, j]
            pos = col > TOL
            if not pos.any():
                raise UnboundedError(f"LP unbounded along column {j}")
            ratios = np.where(pos, self.xB / np.where(pos, col, 1.0), np.inf)
            tmin = ratios.min()
            ties = np.flatnonzero(ratios <= tmin + TOL)
            # smallest basic index among ties (Bland); harmless under Dantzig
            r = int(ties[self.basis[ties].argmin()]) if ties.size > 1 else int(ties[0])
            self.pivot(r, j, col)
            degenerate = degenerate + 1 if tmin <= TOL else 0
            it += 1
        raise RuntimeError(f"simplex did not terminate in {max_iter} iterations")


def linprog_max(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, max_iter=50_000) -> LPResult:
    """Maximize ``c @ x`` over the polyhedron; see module docstring.

    Infeasible problems return ``status="infeasible"`` with a Farkas
    certificate ``y`` over the original rows (ub rows first) such that
    ``y @ A >= 0`` componentwise on ``x``, ``y_ub >= 0`` and ``y @ b < 0``.
    Unbounded problems raise :class:`UnboundedError`.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    m1, m2 = len(b_ub), len(b_eq)
    m = m1 + m2
    if m == 0:
        if np.any(c > TOL):
            raise UnboundedError("no constraints and a positive objective")
        return LPResult("optimal", np.zeros(n), 0.0, 0)

    # [x | slacks], rows flipped so that b >= 0
    A = np.zeros((m, n + m1))
    A[:m1, :n] = A_ub
    A[:m1, n:] = np.eye(m1)
    A[m1:, :n] = A_eq
    b = np.concatenate([b_ub, b_eq])
    sign = np.where(b < 0, -1.0, 1.0)
    A *= sign[:, None]
    b = b * sign

    needs_art = np.ones(m, dtype=bool)
    needs_art[:m1] = sign[:m1] < 0
    art_rows = np.flatnonzero(needs_art)
    n_std = n + m1
    A_full = np.hstack([A, np.zeros((m, art_rows.size))])
    A_full[art_rows, n_std + np.arange(art_rows.size)] = 1.0
    basis = np.empty(m, dtype=int)
    basis[~needs_art] = n + np.flatnonzero(~needs_art[:m1])
    basis[art_rows] = n_std + np.arange(art_rows.size)
    total_cols = A_full.shape[1]

    tab = _Tableau(A_full, b, basis)
    iters = 0
    if art_rows.size:
        c1 = np.zeros(total_cols)
        c1[n_std:] = -1.0
        iters += tab.run(c1, max_iter)
        tab.refactor()
        infeas = -float(c1[tab.basis] @ tab.xB)
        if infeas > 1e-7 * max(1.0, np.abs(b).max()):
            y = c1[tab.basis] @ tab.Binv  # phase-1 duals
            cert = y * sign  # undo the row flips
            return LPResult("infeasible", None, -np.inf, iters, certificate=cert)
        # pivot artificials out of the basis; drop redundant rows
        keep = np.ones(m, dtype=bool)
        for r in range(m):
            if tab.basis[r] < n_std:
                continue
            row = tab.Binv[r] @ A_full[:, :n_std]
            row[tab.basis[tab.basis < n_std]] = 0.0
            cand = np.flatnonzero(np.abs(row) > 1e-7)
            if cand.size:
                j = int(cand[0])
                tab.pivot(r, j, tab.Binv @ A_full[:, j])
            else:
                keep[r] = False
        basis = tab.basis[keep]
        tab = _Tableau(A_full[keep][:, :n_std], b[keep], basis)

    c2 = np.zeros(n_std)
    c2[:n] = c
    iters += tab.run(c2, max_iter)
    tab.refactor()
    z = np.zeros(n_std)
    z[tab.basis] = np.maximum(tab.xB, 0.0)
    x = z[:n]
    return LPResult("optimal", x, float(c @ x), iters)
