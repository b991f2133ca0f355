"""Brute-force and analytic reference computations.

Nothing here imports the production solvers; the oracles exist to check
them. They are exact but only usable on tiny instances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import mpmath
import numpy as np

from .channels import access_gain, backhaul_gain
from .errors import DomainError, OracleSizeError
from .geometry import Scenario
from .model import Association, RateTable

ENUM_LIMIT = 1_000_000


@dataclass
class OracleReport:
    check: str
    instance: str
    oracle: float
    candidate: float
    abs_gap: float
    rel_gap: float
    passed: bool

    @classmethod
    def compare(cls, check, instance, oracle, candidate, rtol):
        gap = abs(candidate - oracle)
        rel = gap / max(abs(oracle), 1e-300)
        return cls(check, instance, float(oracle), float(candidate), float(gap), float(rel), bool(rel <= rtol))

    def row(self) -> dict:
        return asdict(self)


def _user_options(L, N):
    return [None] + [(l, n) for l in range(L) for n in range(N)]


def count_associations(L, U, N, M) -> int:
    return (1 + L * N) ** U * M**L


def enumerate_associations(rates: RateTable):
    """Exact maximum of the end-to-end objective over every feasible association.

    Returns ``(value, Association)``; the first maximizer in enumeration
    order wins ties.
    """
    access = np.asarray(rates.access, dtype=float)
    backhaul = np.asarray(rates.backhaul, dtype=float)
    L, U, N = access.shape
    M = backhaul.shape[0]
    if count_associations(L, U, N, M) > ENUM_LIMIT:
        raise OracleSizeError(f"{count_associations(L, U, N, M)} associations to enumerate")
    best_val, best = -1.0, None
    tb_choices = list(itertools.product(range(M), repeat=L))
    for choice in itertools.product(_user_options(L, N), repeat=U):
        used = [c[1] for c in choice if c is not None]
        if len(used) != len(set(used)):
            continue
        served = [0.0] * L
        for u, c in enumerate(choice):
            if c is not None:
                served[c[0]] += access[c[0], u, c[1]]
        for tbs in tb_choices:
            val = sum(min(served[l], backhaul[tbs[l], l]) for l in range(L))
            if val > best_val:
                best_val, best = val, (choice, tbs)
    choice, tbs = best
    eps = np.zeros((L, U, N), dtype=np.int8)
    for u, c in enumerate(choice):
        if c is not None:
            eps[c[0], u, c[1]] = 1
    theta = np.zeros((M, L), dtype=np.int8)
    theta[list(tbs), list(range(L))] = 1
    return best_val, Association(eps, theta)


def waterfill_bisect(gains, peak_power, bandwidth, noise_psd, rtol=1e-12):
    """Water-filling by bisection on the common level.

    Finds ``w`` with ``sum(max(w - B N0 / h, 0)) = peak_power`` and returns
    the per-link powers.
    """
    gains = np.asarray(gains, dtype=float)
    if gains.size == 0 or not np.any(gains > 0):
        raise DomainError("need at least one positive gain")
    floor = np.full(gains.shape, np.inf)
    pos = gains > 0
    floor[pos] = bandwidth * noise_psd / gains[pos]
    lo = floor.min()
    hi = lo + peak_power
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        spent = np.maximum(mid - floor, 0.0).sum()
        if spent > peak_power:
            hi = mid
        else:
            lo = mid
        if hi - lo <= rtol * hi:
            break
    return np.maximum(0.5 * (lo + hi) - floor, 0.0)


def sum_rate(powers, gains, bandwidth, noise_psd) -> float:
    """Sum of ``B log2(1 + P h / (B N0))`` with plain math calls."""
    return sum(
        bandwidth * math.log2(1 + p * h / (bandwidth * noise_psd))
        for p, h in zip(np.ravel(powers), np.ravel(gains))
    )


def backhaul_rate_mp(distance, fading, radio, dps=50) -> float:
    """Backhaul rate evaluated in ``dps``-digit arithmetic."""
    with mpmath.workdps(dps):
        c = mpmath.mpf(radio.light_speed)
        f = mpmath.mpf(radio.carrier_freq)
        g = (c / (4 * mpmath.pi * mpmath.mpf(distance) * f)) ** 2 * mpmath.mpf(fading)
        b0 = mpmath.mpf(radio.backhaul_bandwidth)
        snr = mpmath.mpf(radio.backhaul_power) * g / (b0 * mpmath.mpf(radio.noise_psd))
        return float(b0 * mpmath.log(1 + snr, 2))


def tableau_simplex(c, A_ub, b_ub, A_eq=None, b_eq=None, tol=1e-9):
    """Textbook full-tableau two-phase simplex with Bland's rule.

    Maximizes ``c @ x``; returns ``(objective, x)`` or ``(None, None)`` if
    infeasible.
    """
    c = np.asarray(c, float)
    n = c.size
    A_ub = np.asarray(A_ub, float).reshape(-1, n)
    b_ub = np.asarray(b_ub, float)
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, float)
    m1, m = len(b_ub), len(b_ub) + len(b_eq)
    # columns: x, slacks, one artificial per row
    T = np.zeros((m + 1, n + m1 + m + 1))
    T[:m1, :n] = A_ub
    T[:m1, n : n + m1] = np.eye(m1)
    T[m1:m, :n] = A_eq
    T[:m, -1] = np.concatenate([b_ub, b_eq])
    T[np.flatnonzero(T[:m, -1] < 0)] *= -1
    T[:m, n + m1 : n + m1 + m] = np.eye(m)
    basis = list(range(n + m1, n + m1 + m))

    def pivot(r, j):
        T[r] /= T[r, j]
        for i in range(T.shape[0]):
            if i != r and T[i, j] != 0:
                T[i] -= T[i, j] * T[r]
        basis[r] = j

    def optimize(ncols):
        while True:
            # objective row holds reduced costs of a minimization
            enter = next((j for j in range(ncols) if T[-1, j] < -tol), None)
            if enter is None:
                return
            rows = [i for i in range(m) if T[i, enter] > tol]
            if not rows:
                raise ValueError("unbounded")
            best = min(T[i, -1] / T[i, enter] for i in rows)
            r = min(
                (i for i in rows if T[i, -1] / T[i, enter] <= best + tol),
                key=lambda i: basis[i],
            )
            pivot(r, enter)

    # phase 1: minimize the sum of artificials
    T[-1, :] = 0.0
    T[-1, n + m1 : n + m1 + m] = 1.0
    for i in range(m):
        T[-1] -= T[i]
    optimize(n + m1 + m)
    if -T[-1, -1] > 1e-7:
        return None, None
    for r in range(m):
        if basis[r] >= n + m1:
            j = next((j for j in range(n + m1) if abs(T[r, j]) > 1e-9), None)
            if j is not None:
                pivot(r, j)
    keep = [r for r in range(m) if basis[r] < n + m1]
    T = np.vstack([T[keep][:, list(range(n + m1)) + [-1]], np.zeros(n + m1 + 1)])
    basis = [basis[r] for r in keep]
    m = len(keep)
    # phase 2: minimize -c
    T[-1, :n] = -c
    for i, j in enumerate(basis):
        if T[-1, j] != 0:
            T[-1] -= T[-1, j] * T[i]
    optimize(n + m1)
    x = np.zeros(n + m1)
    for i, j in enumerate(basis):
        x[j] = T[i, -1]
    return float(c @ x[:n]), x[:n]


def best_objective_at(positions, scenario: Scenario, refine_power: bool = True):
    """Best end-to-end objective at fixed UAV positions, by enumeration.

    ``positions`` is ``(K, L, 3)``: a batch of UAV layouts evaluated at once.
    Each association is scored with water-filled power (bisection, per UAV)
    when ``refine_power`` is set, otherwise with ``P_l / N`` per link.
    """
    positions = np.asarray(positions, dtype=float)
    K, L, _ = positions.shape
    U, N, M = scenario.num_users, scenario.num_rbs, scenario.num_tbs
    if count_associations(L, U, N, M) > ENUM_LIMIT:
        raise OracleSizeError("instance too large for the placement oracle")
    radio = scenario.radio
    B, N0 = radio.rb_bandwidth, radio.noise_psd
    h = access_gain(positions[:, :, None, :], scenario.users[None, None], radio)  # K,L,U
    fad = scenario.fading.mean(axis=2)  # M,L
    bh_gain = backhaul_gain(
        scenario.tbs[None, :, None, :], positions[:, None, :, :], fad[None], radio
    )  # K,M,L
    b0 = radio.backhaul_bandwidth
    cap = (b0 * np.log2(1 + radio.backhaul_power * bh_gain / (b0 * N0))).max(axis=1)  # K,L

    # RB identity is irrelevant for RB-flat gains, so options are (UAV or none) per user
    # and the RB budget only limits how many users are served.
    best = np.zeros(K)
    for choice in itertools.product(range(-1, L), repeat=U):
        if sum(c >= 0 for c in choice) > N:
            continue
        total = np.zeros(K)
        for l in range(L):
            users = [u for u, c in enumerate(choice) if c == l]
            if not users:
                continue
            g = h[:, l, users]  # K, k
            peak = scenario.peak_power[l]
            if refine_power:
                p = np.stack([waterfill_bisect(gk, peak, B, N0) for gk in g])
            else:
                p = np.full(g.shape, peak / N)
            served = (B * np.log2(1 + p * g / (B * N0))).sum(axis=1)
            total += np.minimum(served, cap[:, l])
        best = np.maximum(best, total)
    return best


def lattice(area, step):
    xs = np.arange(0.0, area[0] + 1e-9, step)
    ys = np.arange(0.0, area[1] + 1e-9, step)
    return np.array([(x, y) for x in xs for y in ys])


def grid_placement(scenario: Scenario, lattice_step: float, refine_power: bool = True, max_evals=250_000):
    """Exhaustive search over a square lattice of UAV positions.

    Every UAV ranges over the lattice at its fixed altitude. Returns
    ``(best value, (L, 3) positions)``.
    """
    pts = lattice(scenario.area, lattice_step)
    L = scenario.num_uavs
    if len(pts) ** L > max_evals:
        raise OracleSizeError(f"{len(pts) ** L} lattice combinations")
    alt = scenario.uavs[:, 2]
    combos = np.array(list(itertools.product(range(len(pts)), repeat=L)))
    layouts = np.concatenate([pts[combos], np.broadcast_to(alt, combos.shape)[..., None]], axis=2)
    values = np.concatenate(
        [best_objective_at(chunk, scenario, refine_power) for chunk in np.array_split(layouts, max(1, len(layouts) // 4096))]
    )
    k = int(np.argmax(values))
    return float(values[k]), layouts[k]
