"""Shannon rates on access and backhaul links and the end-to-end objective."""

from __future__ import annotations

import numpy as np

from .channels import access_gain_matrix, backhaul_link_gain
from .errors import StructureError
from .geometry import RadioParams, Scenario
from .model import Association, EndToEndValue, PowerAllocation, RateTable


def access_rate(power, gain, bandwidth: float, noise_psd: float):
    """``B log2(1 + P h / (B N0))`` in bit/s; zero for zero power."""
    power = np.asarray(power, dtype=float)
    return bandwidth * np.log2(1.0 + power * gain / (bandwidth * noise_psd))


def backhaul_rate(gain, radio: RadioParams):
    """Rate of one TB-UAV link with the fixed per-UAV backhaul budget."""
    b0 = radio.backhaul_bandwidth
    return b0 * np.log2(1.0 + radio.backhaul_power * gain / (b0 * radio.noise_psd))


def backhaul_rate_matrix(scenario: Scenario) -> np.ndarray:
    """``(M, L)`` backhaul rates for the current UAV positions."""
    return backhaul_rate(backhaul_link_gain(scenario), scenario.radio)


def uniform_power(scenario: Scenario) -> np.ndarray:
    """Every (UAV, user, RB) slot at ``P_l / N``."""
    L, U, N = scenario.num_uavs, scenario.num_users, scenario.num_rbs
    per_rb = scenario.peak_power / N
    return np.broadcast_to(per_rb[:, None, None], (L, U, N)).copy()


def rate_table(scenario: Scenario, power) -> RateTable:
    power = np.asarray(power, dtype=float)
    shape = (scenario.num_uavs, scenario.num_users, scenario.num_rbs)
    if power.shape != shape:
        raise StructureError(f"power shape {power.shape} != {shape}")
    radio = scenario.radio
    gain = access_gain_matrix(scenario)[:, :, None]
    access = access_rate(power, gain, radio.rb_bandwidth, radio.noise_psd)
    return RateTable(access=access, backhaul=backhaul_rate_matrix(scenario))


def end_to_end(
    assoc: Association,
    rates: RateTable,
    power: PowerAllocation | None = None,
    peak_power=None,
) -> EndToEndValue:
    """Sum over UAVs of ``min(served access rate, chosen backhaul rate)``.

    Raises :class:`ConstraintViolation` if the association (or, when given,
    the power allocation) is infeasible.
    """
    assoc.validate()
    if rates.access.shape != assoc.eps.shape or rates.backhaul.shape != assoc.theta.shape:
        raise StructureError("rate table and association shapes differ")
    if power is not None:
        if peak_power is None:
            raise StructureError("peak_power is required to check a power allocation")
        power.validate(assoc, peak_power)
    access_sum = (assoc.eps * rates.access).sum(axis=(1, 2))
    backhaul = (assoc.theta * rates.backhaul).sum(axis=0)
    return EndToEndValue(
        per_uav=np.minimum(access_sum, backhaul),
        access_sum=access_sum,
        backhaul=backhaul,
    )
