"""Scenario geometry: node coordinates, radio constants and seeded draws."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
import yaml

from .errors import ConfigError
from .units import dbm_to_watt

SPEED_OF_LIGHT = 3e8

# Fixed ids for the named RNG substreams. New consumers get new ids so that
# existing streams never shift.
STREAMS = {"users": 0, "fading": 1, "placement": 2, "benchmark": 3, "trials": 4}


class Point3(NamedTuple):
    x: float
    y: float
    z: float


def distance(a: Sequence[float], b: Sequence[float]) -> float:
    """Euclidean distance in meters between two 3D points."""
    return math.dist(a, b)


def substream(seed: int, name: str, *extra: int) -> np.random.Generator:
    """Independent generator for the named consumer of ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(STREAMS[name], *extra))
    return np.random.default_rng(ss)


def derive_seed(seed: int, name: str, *extra: int) -> int:
    ss = np.random.SeedSequence(int(seed), spawn_key=(STREAMS[name], *extra))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(hi) << 32 | int(lo)


@dataclass(frozen=True)
class RadioParams:
    """Link-budget constants, SI units throughout."""

    carrier_freq: float = SPEED_OF_LIGHT / 0.125
    light_speed: float = SPEED_OF_LIGHT
    rb_bandwidth: float = 180e3
    backhaul_bandwidth: float = 1e6
    backhaul_power: float = 10.0
    noise_psd: float = dbm_to_watt(-110.0) / 180e3
    num_rbs: int = 30
    excess_loss_los: float = 1.0
    excess_loss_nlos: float = 12.0
    los_c1: float = 9.6
    los_c2: float = 0.29
    rician_k: float = 20.0

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name == "rician_k":
                if not v >= 0:
                    raise ConfigError(f"rician_k must be >= 0, got {v}")
            elif not v > 0:
                raise ConfigError(f"{f.name} must be positive, got {v}")
        if int(self.num_rbs) != self.num_rbs:
            raise ConfigError("num_rbs must be an integer")
        if self.excess_loss_nlos < self.excess_loss_los:
            raise ConfigError("excess_loss_nlos must be >= excess_loss_los")

    @property
    def wavelength(self) -> float:
        return self.light_speed / self.carrier_freq


@dataclass(frozen=True)
class ScenarioConfig:
    """User-facing scenario description.

    Lengths are meters, powers dBm, frequencies Hz. Converted to SI watts
    when a :class:`Scenario` is generated.
    """

    num_users: int = 20
    num_uavs: int = 4
    num_rbs: int = 30
    area: tuple[float, float] = (1000.0, 1000.0)
    tb_positions: tuple[tuple[float, float, float], ...] = (
        (0.0, 500.0, 200.0),
        (1000.0, 500.0, 200.0),
    )
    uav_altitude: float = 100.0
    uav_positions: tuple[tuple[float, float], ...] | None = None
    peak_power_dbm: float = 30.0
    backhaul_power_dbm: float = 40.0
    backhaul_bandwidth_hz: float = 1e6
    rb_bandwidth_hz: float = 180e3
    noise_dbm_per_rb: float = -110.0
    wavelength_m: float = 0.125
    light_speed: float = SPEED_OF_LIGHT
    xi_los_db: float = 1.0
    xi_nlos_db: float = 12.0
    los_c1: float = 9.6
    los_c2: float = 0.29
    rician_k: float = 20.0
    rician_k_db: bool = False
    seed: int = 0

    def validate(self) -> None:
        for name in ("num_users", "num_uavs", "num_rbs"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v}")
        if len(self.area) != 2 or min(self.area) <= 0:
            raise ConfigError(f"area must be two positive lengths, got {self.area}")
        if not self.tb_positions:
            raise ConfigError("at least one tethered balloon is required")
        for p in self.tb_positions:
            if len(p) != 3 or p[2] <= 0:
                raise ConfigError(f"TB position needs positive altitude: {p}")
        if self.uav_altitude <= 0:
            raise ConfigError("uav_altitude must be positive")
        if self.uav_positions is not None:
            if len(self.uav_positions) != self.num_uavs:
                raise ConfigError("uav_positions length must equal num_uavs")
            for p in self.uav_positions:
                if len(p) != 2:
                    raise ConfigError(f"UAV position must be (x, y): {p}")
        if self.wavelength_m <= 0 or self.light_speed <= 0:
            raise ConfigError("wavelength and light speed must be positive")

    def radio(self) -> RadioParams:
        kappa = 10 ** (self.rician_k / 10) if self.rician_k_db else self.rician_k
        return RadioParams(
            carrier_freq=self.light_speed / self.wavelength_m,
            light_speed=self.light_speed,
            rb_bandwidth=self.rb_bandwidth_hz,
            backhaul_bandwidth=self.backhaul_bandwidth_hz,
            backhaul_power=dbm_to_watt(self.backhaul_power_dbm),
            noise_psd=dbm_to_watt(self.noise_dbm_per_rb) / self.rb_bandwidth_hz,
            num_rbs=self.num_rbs,
            excess_loss_los=self.xi_los_db,
            excess_loss_nlos=self.xi_nlos_db,
            los_c1=self.los_c1,
            los_c2=self.los_c2,
            rician_k=kappa,
        )

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["area"] = list(self.area)
        d["tb_positions"] = [list(p) for p in self.tb_positions]
        if self.uav_positions is not None:
            d["uav_positions"] = [list(p) for p in self.uav_positions]
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(data)
        try:
            if "area" in kw:
                kw["area"] = tuple(float(v) for v in kw["area"])
            if "tb_positions" in kw:
                kw["tb_positions"] = tuple(
                    tuple(float(v) for v in p) for p in kw["tb_positions"]
                )
            if kw.get("uav_positions") is not None:
                kw["uav_positions"] = tuple(
                    tuple(float(v) for v in p) for p in kw["uav_positions"]
                )
        except TypeError as exc:
            raise ConfigError(f"malformed coordinate list: {exc}") from None
        cfg = cls(**kw)
        cfg.validate()
        return cfg


def load_config(path: str | Path) -> ScenarioConfig:
    """Read a YAML key-value scenario file."""
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return ScenarioConfig.from_dict(data)


def default_uav_grid(num_uavs: int, area: tuple[float, float]) -> np.ndarray:
    """Cell centres of a near-square grid, row-major, first ``num_uavs``."""
    cols = math.ceil(math.sqrt(num_uavs))
    rows = math.ceil(num_uavs / cols)
    w, h = area
    pts = [
        ((c + 0.5) * w / cols, (r + 0.5) * h / rows)
        for r in range(rows)
        for c in range(cols)
    ]
    return np.array(pts[:num_uavs], dtype=float)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Scenario:
    """Immutable snapshot of one network drop.

    ``tbs``, ``uavs`` and ``users`` are ``(M, 3)``, ``(L, 3)`` and ``(U, 3)``
    coordinate arrays; ``fading`` holds the backhaul Rician power gains with
    shape ``(M, L, N)``. Fading is bound to the UAV index, not its position,
    so moving a UAV keeps its small-scale realization.
    """

    tbs: np.ndarray
    uavs: np.ndarray
    users: np.ndarray
    radio: RadioParams
    peak_power: np.ndarray
    fading: np.ndarray
    area: tuple[float, float]
    seed: int = 0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("tbs", "uavs", "users", "peak_power", "fading"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        M, L, U = len(self.tbs), len(self.uavs), len(self.users)
        if min(M, L, U) < 1:
            raise ConfigError("scenario needs at least one TB, UAV and user")
        if self.fading.shape != (M, L, self.radio.num_rbs):
            raise ConfigError(
                f"fading shape {self.fading.shape} != {(M, L, self.radio.num_rbs)}"
            )
        if self.peak_power.shape != (L,):
            raise ConfigError("peak_power must have one entry per UAV")

    @property
    def num_tbs(self) -> int:
        return len(self.tbs)

    @property
    def num_uavs(self) -> int:
        return len(self.uavs)

    @property
    def num_users(self) -> int:
        return len(self.users)

    @property
    def num_rbs(self) -> int:
        return self.radio.num_rbs

    def with_uavs(self, uavs) -> "Scenario":
        return dataclasses.replace(self, uavs=np.asarray(uavs, dtype=float))

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            self.radio == other.radio
            and self.area == other.area
            and self.seed == other.seed
            and all(
                np.array_equal(getattr(self, n), getattr(other, n))
                for n in ("tbs", "uavs", "users", "peak_power", "fading")
            )
        )

    __hash__ = None


def generate_scenario(config: ScenarioConfig, seed: int) -> Scenario:
    """Draw users and backhaul fading for ``config`` from ``seed``.

    Users are uniform in the area rectangle at ground level; TBs and UAVs sit
    at their configured positions. Identical ``(config, seed)`` give identical
    scenarios.
    """
    from .channels import sample_rician_power

    config.validate()
    radio = config.radio()
    w, h = config.area
    rng = substream(seed, "users")
    xy = rng.uniform((0.0, 0.0), (w, h), size=(config.num_users, 2))
    users = np.column_stack([xy, np.zeros(config.num_users)])

    if config.uav_positions is None:
        uav_xy = default_uav_grid(config.num_uavs, config.area)
    else:
        uav_xy = np.array(config.uav_positions, dtype=float)
    uavs = np.column_stack([uav_xy, np.full(config.num_uavs, config.uav_altitude)])

    tbs = np.array(config.tb_positions, dtype=float)
    shape = (len(tbs), config.num_uavs, config.num_rbs)
    fading = sample_rician_power(radio.rician_k, substream(seed, "fading"), size=shape)
    peak = np.full(config.num_uavs, dbm_to_watt(config.peak_power_dbm))
    return Scenario(
        tbs=tbs,
        uavs=uavs,
        users=users,
        radio=radio,
        peak_power=peak,
        fading=fading,
        area=(float(w), float(h)),
        seed=int(seed),
    )
