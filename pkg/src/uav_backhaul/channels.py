"""Air-to-ground access gains and Rician backhaul gains."""

from __future__ import annotations

import numpy as np

from .errors import DomainError
from .geometry import RadioParams, Scenario
from .units import db_to_linear


def elevation_deg(horizontal, height):
    """Elevation angle in degrees; atan2 keeps it defined at zero offset."""
    return np.degrees(np.arctan2(height, horizontal))


def los_probability_from_angle(theta_deg, c1, c2):
    return 1.0 / (1.0 + c1 * np.exp(-c2 * (theta_deg - c1)))


def _offsets(uav, user):
    uav = np.asarray(uav, dtype=float)
    user = np.asarray(user, dtype=float)
    horiz = np.hypot(uav[..., 0] - user[..., 0], uav[..., 1] - user[..., 1])
    height = uav[..., 2] - user[..., 2]
    dist = np.hypot(horiz, height)
    if np.any(dist <= 0):
        raise DomainError("UAV and user positions coincide")
    return horiz, height, dist


def los_probability(uav, user, c1: float, c2: float):
    """Probability of a line-of-sight link from ``uav`` to ``user``.

    Logistic in the elevation angle (degrees) with environment constants
    ``c1`` and ``c2``.
    """
    horiz, height, _ = _offsets(uav, user)
    if np.any(height <= 0):
        raise DomainError("UAV must be above the user")
    return los_probability_from_angle(elevation_deg(horiz, height), c1, c2)


def free_space_loss(dist, radio: RadioParams):
    """Squared free-space term ``(4 pi d f_c / C)^2``."""
    return (4 * np.pi * dist * radio.carrier_freq / radio.light_speed) ** 2


def access_path_loss(uav, user, radio: RadioParams, p_los=None):
    """LoS-probability-weighted mean path loss (linear, >= 1 for far links).

    ``p_los`` overrides the elevation model, mainly for tests.
    """
    horiz, height, dist = _offsets(uav, user)
    if p_los is None:
        if np.any(height <= 0):
            raise DomainError("UAV must be above the user")
        p_los = los_probability_from_angle(
            elevation_deg(horiz, height), radio.los_c1, radio.los_c2
        )
    fspl = free_space_loss(dist, radio)
    pl_los = db_to_linear(radio.excess_loss_los) * fspl
    pl_nlos = db_to_linear(radio.excess_loss_nlos) * fspl
    return p_los * pl_los + (1 - p_los) * pl_nlos


def access_gain(uav, user, radio: RadioParams, p_los=None):
    return 1.0 / access_path_loss(uav, user, radio, p_los)


def backhaul_gain(tb, uav, fading, radio: RadioParams):
    """Free-space gain times the small-scale power gain ``fading``."""
    tb = np.asarray(tb, dtype=float)
    uav = np.asarray(uav, dtype=float)
    dist = np.linalg.norm(tb - uav, axis=-1)
    if np.any(dist <= 0):
        raise DomainError("TB and UAV positions coincide")
    fading = np.asarray(fading, dtype=float)
    if np.any(fading <= 0):
        raise DomainError("fading gain must be positive")
    return (radio.light_speed / (4 * np.pi * dist * radio.carrier_freq)) ** 2 * fading


def sample_rician_power(kappa: float, rng: np.random.Generator, size=None):
    """Unit-mean Rician power gain ``|g|^2``.

    ``g`` has a fixed LoS part ``sqrt(kappa/(kappa+1))`` plus a circular
    complex Gaussian part of variance ``1/(kappa+1)``. ``kappa = inf`` gives
    exactly one.
    """
    if not kappa >= 0:
        raise DomainError(f"Rician factor must be >= 0, got {kappa}")
    if np.isinf(kappa):
        return np.ones(size) if size is not None else 1.0
    los = np.sqrt(kappa / (kappa + 1))
    sigma = np.sqrt(1 / (2 * (kappa + 1)))
    re = rng.normal(los, sigma, size)
    im = rng.normal(0.0, sigma, size)
    return re * re + im * im


def access_gain_matrix(scenario: Scenario) -> np.ndarray:
    """``(L, U)`` access gains; identical on every RB."""
    uav = scenario.uavs[:, None, :]
    user = scenario.users[None, :, :]
    return access_gain(uav, user, scenario.radio)


def backhaul_gain_matrix(scenario: Scenario) -> np.ndarray:
    """``(M, L, N)`` per-RB backhaul gains."""
    tb = scenario.tbs[:, None, None, :]
    uav = scenario.uavs[None, :, None, :]
    return backhaul_gain(tb, uav, scenario.fading, scenario.radio)


def backhaul_link_gain(scenario: Scenario) -> np.ndarray:
    """``(M, L)`` wideband backhaul gain: per-RB gains averaged over RBs."""
    return backhaul_gain_matrix(scenario).mean(axis=2)
