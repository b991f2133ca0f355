import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uav_backhaul.channels import (
    access_gain,
    access_path_loss,
    backhaul_gain,
    elevation_deg,
    los_probability,
    sample_rician_power,
)
from uav_backhaul.errors import DomainError
from uav_backhaul.geometry import RadioParams

C1, C2 = 9.6, 0.29


def test_los_probability_overhead():
    p = los_probability((0, 0, 100), (0, 0, 0), C1, C2)
    assert p == pytest.approx(1 / (1 + C1 * math.exp(-C2 * (90 - C1))), abs=1e-15)
    assert abs(p - 1.0) < 1e-9


def test_los_probability_at_c1_degrees():
    # horizontal offset putting the elevation at exactly c1 degrees
    h = 100 / math.tan(math.radians(C1))
    p = los_probability((h, 0, 100), (0, 0, 0), C1, C2)
    assert p == pytest.approx(1 / 10.6, abs=1e-12)


def test_elevation_45_degrees():
    assert elevation_deg(100.0, 100.0) == pytest.approx(45.0, abs=1e-12)


def test_los_coincident_points():
    with pytest.raises(DomainError):
        los_probability((1, 1, 0), (1, 1, 0), C1, C2)


@given(st.floats(0, 5000), st.floats(1, 1000))
def test_los_probability_in_unit_interval(horiz, alt):
    p = los_probability((horiz, 0, alt), (0, 0, 0), C1, C2)
    assert 0 < p <= 1


@given(st.floats(0, 3000), st.floats(1, 500), st.floats(1, 500))
def test_los_nondecreasing_in_altitude(horiz, a, b):
    lo, hi = sorted((a, b))
    assert los_probability((horiz, 0, lo), (0, 0, 0), C1, C2) <= los_probability(
        (horiz, 0, hi), (0, 0, 0), C1, C2
    )


def test_path_loss_unit_distance():
    pl = access_path_loss((0, 0, 1), (0, 0, 0), RadioParams(), p_los=1.0)
    # (4 pi * 1 m * 2.4 GHz / c)^2 = (32 pi)^2, times xi_LoS = 1 dB
    assert pl == pytest.approx((32 * math.pi) ** 2 * 10**0.1, rel=1e-12)
    assert (32 * math.pi) ** 2 == pytest.approx(1.0107e4, rel=1e-4)


def test_path_loss_zero_db_excess():
    radio = RadioParams(excess_loss_los=1e-12, excess_loss_nlos=12.0)
    pl = access_path_loss((0, 0, 1), (0, 0, 0), radio, p_los=1.0)
    assert pl == pytest.approx((32 * math.pi) ** 2, rel=1e-9)


def test_equal_excess_losses_ignore_los_probability():
    radio = RadioParams(excess_loss_los=5.0, excess_loss_nlos=5.0)
    a = access_path_loss((10, 0, 100), (0, 0, 0), radio, p_los=0.1)
    b = access_path_loss((10, 0, 100), (0, 0, 0), radio, p_los=0.9)
    assert a == pytest.approx(b, rel=1e-14)


def test_zero_los_probability_gives_nlos_loss(radio):
    pl = access_path_loss((30, 40, 100), (0, 0, 0), radio, p_los=0.0)
    d = math.sqrt(30**2 + 40**2 + 100**2)
    fspl = (4 * math.pi * d * radio.carrier_freq / radio.light_speed) ** 2
    assert pl == fspl * 10 ** (radio.excess_loss_nlos / 10)


def test_path_loss_at_least_los(radio):
    horiz = np.linspace(0, 2000, 50)
    uav = np.column_stack([horiz, np.zeros(50), np.full(50, 100.0)])
    pl = access_path_loss(uav, np.zeros(3), radio)
    pl_los = access_path_loss(uav, np.zeros(3), radio, p_los=1.0)
    assert np.all(pl >= pl_los)


def test_gain_is_reciprocal(radio):
    uav, user = (10, 20, 100), (0, 0, 0)
    assert access_gain(uav, user, radio) == pytest.approx(1 / access_path_loss(uav, user, radio))


def test_gain_inverse_square(radio):
    g1 = access_gain((0, 0, 50), (0, 0, 0), radio, p_los=0.7)
    g2 = access_gain((0, 0, 100), (0, 0, 0), radio, p_los=0.7)
    assert g1 / g2 == pytest.approx(4.0, rel=1e-12)


def test_gain_frequency_squared():
    a = RadioParams(carrier_freq=2.4e9)
    b = RadioParams(carrier_freq=4.8e9)
    ga = access_gain((5, 5, 100), (0, 0, 0), a)
    gb = access_gain((5, 5, 100), (0, 0, 0), b)
    assert ga / gb == pytest.approx(4.0, rel=1e-12)


@given(st.floats(0, 2000), st.floats(0, 2000))
def test_gain_nonincreasing_in_horizontal_distance(a, b):
    radio = RadioParams()
    lo, hi = sorted((a, b))
    assert access_gain((lo, 0, 100), (0, 0, 0), radio) >= access_gain((hi, 0, 100), (0, 0, 0), radio)


def test_backhaul_gain_normalization(radio):
    beta = radio.light_speed / (4 * math.pi * radio.carrier_freq)
    assert backhaul_gain((0, 0, 200), (beta, 0, 200), 1.0, radio) == pytest.approx(1.0, rel=1e-12)


def test_backhaul_gain_linear_in_fading(radio):
    g1 = backhaul_gain((0, 500, 200), (300, 400, 100), 1.0, radio)
    g2 = backhaul_gain((0, 500, 200), (300, 400, 100), 2.0, radio)
    assert g2 == pytest.approx(2 * g1, rel=1e-15)


def test_backhaul_gain_matches_fspl(radio):
    d = math.dist((0, 500, 200), (500, 500, 100))
    fspl = (4 * math.pi * d * radio.carrier_freq / radio.light_speed) ** 2
    g = backhaul_gain((0, 500, 200), (500, 500, 100), 1.0, radio)
    assert abs(g * fspl - 1) < 1e-12


def test_backhaul_errors(radio):
    with pytest.raises(DomainError):
        backhaul_gain((0, 0, 100), (0, 0, 100), 1.0, radio)
    with pytest.raises(DomainError):
        backhaul_gain((0, 0, 200), (0, 0, 100), 0.0, radio)


def test_rician_pure_los(rng):
    assert np.all(sample_rician_power(np.inf, rng, size=10) == 1.0)


def test_rician_negative_k(rng):
    with pytest.raises(DomainError):
        sample_rician_power(-1.0, rng)


@pytest.mark.parametrize("kappa", [0.0, 1.0, 20.0])
def test_rician_moments(kappa, rng):
    x = sample_rician_power(kappa, rng, size=1_000_000)
    assert abs(x.mean() - 1) < 0.01
    var = (2 * kappa + 1) / (kappa + 1) ** 2
    assert abs(x.var() - var) < 0.05 * var


def test_rician_backhaul_mean(rng, radio):
    phi = sample_rician_power(20.0, rng, size=1_000_000)
    beta = radio.light_speed / (4 * math.pi * radio.carrier_freq)
    g = backhaul_gain((0, 0, 0), (beta, 0, 0), phi, radio)
    assert abs(g.mean() - 1) < 0.01
    assert (2 * 20 + 1) / 21**2 == pytest.approx(0.0930, abs=5e-5)
