"""UAV transmit powers for a fixed association via the Lagrangian dual."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channels import access_gain_matrix
from .errors import DomainError
from .geometry import Scenario
from .model import Association, PowerAllocation
from .rates import access_rate, backhaul_rate_matrix

LN2 = math.log(2.0)


def power_from_duals(lam, mu, gain, bandwidth: float, noise_psd: float):
    """Stationary power ``[mu B / (ln2 lam) - B N0 / h]^+`` in watts."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise DomainError("power multiplier must be positive")
    level = mu * bandwidth / (LN2 * lam)
    return np.maximum(level - bandwidth * noise_psd / np.asarray(gain, dtype=float), 0.0)


def step_size(i: int, delta0: float = 0.1) -> float:
    """Square-summable but non-summable diminishing step ``delta0 / sqrt(i)``."""
    return delta0 / math.sqrt(i)


@dataclass
class DualState:
    lam: np.ndarray
    mu: np.ndarray
    iterations: np.ndarray
    step: np.ndarray
    converged: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))


@dataclass
class UavPowerResult:
    power: np.ndarray
    lam: float
    mu: float
    iterations: int
    converged: bool


def _exact_level(noise, active):
    """Water level that spends the (normalized) budget on ``active`` exactly.

    Starts from the active set suggested by the dual iterate and repairs it
    until it is consistent with the level it produces.
    """
    order = np.argsort(noise, kind="stable")
    k = int(active.sum()) or 1
    while True:
        level = (1.0 + noise[order[:k]].sum()) / k
        if k > 1 and noise[order[k - 1]] >= level:
            k -= 1
        elif k < noise.size and noise[order[k]] < level:
            k += 1
        else:
            return level


def solve_uav_power(
    gains,
    peak_power: float,
    bandwidth: float,
    noise_psd: float,
    delta0: float = 0.1,
    tol: float = 1e-6,
    max_iter: int = 5000,
) -> UavPowerResult:
    """Dual subgradient power allocation for the links of one UAV.

    The iteration runs on the multiplier of the power budget, normalized so
    that it is dimensionless, with the projected step taken in log space
    (which keeps it positive). The backhaul multiplier ``mu`` is projected on
    its dual domain ``mu >= 1`` with subgradient the served rate, so it stays
    at 1. After the iteration stops (multiplier movement below ``tol`` or
    ``max_iter``), the primal is recovered from the stationarity condition at
    the level that meets the budget exactly on the iterate's active set.
    """
    gains = np.asarray(gains, dtype=float)
    if gains.size == 0:
        return UavPowerResult(gains.copy(), np.inf, 1.0, 0, True)
    if np.any(gains <= 0):
        raise DomainError("link gains must be positive")
    # noise levels in units of the budget: p_k = [mu/rho - noise_k]^+
    noise = bandwidth * noise_psd / (gains * peak_power)
    mu = 1.0
    rho = mu * gains.size / (1.0 + noise.sum())
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        p = np.maximum(mu / rho - noise, 0.0)
        slack = 1.0 - p.sum()
        served = np.log1p(p / noise).sum() / LN2
        d = step_size(it, delta0)
        new_rho = rho * math.exp(-d * slack)
        new_mu = max(1.0, mu - d * served)
        move = max(abs(math.log(new_rho / rho)), abs(new_mu - mu))
        rho, mu = new_rho, new_mu
        if move < tol:
            converged = True
            break
    active = mu / rho > noise
    level = _exact_level(noise, active)
    p = np.maximum(level - noise, 0.0)
    p *= 1.0 / p.sum()  # removes the last few ulps of budget error
    lam = mu / level * bandwidth / (LN2 * peak_power)
    return UavPowerResult(p * peak_power, lam, mu, it, converged)


def subgradient_solve(
    assoc: Association,
    scenario: Scenario,
    delta0: float = 0.1,
    tol: float = 1e-6,
    max_iter: int = 5000,
) -> tuple[PowerAllocation, DualState]:
    """Optimal powers for every UAV given the association.

    UAVs are independent (separate budgets, separable objective), so each is
    solved on its own; links with ``eps = 0`` get zero power. ``rates`` on
    the result are the per-UAV end-to-end values ``min(access, backhaul)``.
    """
    radio = scenario.radio
    gain = access_gain_matrix(scenario)
    L = scenario.num_uavs
    power = np.zeros(assoc.eps.shape)
    lam = np.full(L, np.inf)
    mu = np.ones(L)
    iters = np.zeros(L, dtype=int)
    conv = np.ones(L, dtype=bool)
    for l in range(L):
        links = np.argwhere(assoc.eps[l])
        if links.size == 0:
            continue
        res = solve_uav_power(
            gain[l, links[:, 0]],
            float(scenario.peak_power[l]),
            radio.rb_bandwidth,
            radio.noise_psd,
            delta0=delta0,
            tol=tol,
            max_iter=max_iter,
        )
        power[l, links[:, 0], links[:, 1]] = res.power
        lam[l], mu[l], iters[l], conv[l] = res.lam, res.mu, res.iterations, res.converged
    access = access_rate(power, gain[:, :, None], radio.rb_bandwidth, radio.noise_psd)
    served = (assoc.eps * access).sum(axis=(1, 2))
    cap = (assoc.theta * backhaul_rate_matrix(scenario)).sum(axis=0)
    steps = np.array([step_size(max(i, 1), delta0) for i in iters])
    alloc = PowerAllocation(power, np.minimum(served, cap), bool(conv.all()))
    return alloc, DualState(lam, mu, iters, steps, conv)


def uniform_allocation(assoc: Association, scenario: Scenario) -> PowerAllocation:
    """``P_l / N`` on every associated link."""
    radio = scenario.radio
    power = assoc.eps * (scenario.peak_power / scenario.num_rbs)[:, None, None]
    gain = access_gain_matrix(scenario)
    access = access_rate(power, gain[:, :, None], radio.rb_bandwidth, radio.noise_psd)
    served = (assoc.eps * access).sum(axis=(1, 2))
    cap = (assoc.theta * backhaul_rate_matrix(scenario)).sum(axis=0)
    return PowerAllocation(power.astype(float), np.minimum(served, cap))
