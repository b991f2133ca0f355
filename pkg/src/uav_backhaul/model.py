"""Decision-variable containers shared by the solvers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConstraintViolation, StructureError


@dataclass(frozen=True)
class Association:
    """Binary access map ``eps[l, u, n]`` and backhaul map ``theta[m, l]``."""

    eps: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "eps", np.asarray(self.eps, dtype=np.int8))
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=np.int8))
        if self.eps.ndim != 3 or self.theta.ndim != 2:
            raise StructureError("eps must be (L, U, N) and theta (M, L)")
        if self.eps.shape[0] != self.theta.shape[1]:
            raise StructureError("eps and theta disagree on the number of UAVs")

    @property
    def shape(self):
        L, U, N = self.eps.shape
        return self.theta.shape[0], L, U, N

    def links(self, l: int) -> list[tuple[int, int]]:
        """``(user, rb)`` pairs served by UAV ``l`` in index order."""
        return [tuple(map(int, p)) for p in np.argwhere(self.eps[l])]

    def serving_uav(self) -> np.ndarray:
        """Per user, the serving UAV index or -1."""
        out = np.full(self.eps.shape[1], -1)
        l, u, _ = np.nonzero(self.eps)
        out[u] = l
        return out

    def validate(self) -> None:
        eps, theta = self.eps, self.theta
        if np.any((eps != 0) & (eps != 1)) or np.any((theta != 0) & (theta != 1)):
            raise ConstraintViolation("binary", 0, "entries must be 0 or 1")
        per_user = eps.sum(axis=(0, 2))
        for u in np.flatnonzero(per_user > 1):
            raise ConstraintViolation("user", int(u), f"user served {per_user[u]} times")
        per_rb = eps.sum(axis=(0, 1))
        for n in np.flatnonzero(per_rb > 1):
            raise ConstraintViolation("rb", int(n), f"RB used {per_rb[n]} times")
        per_uav = theta.sum(axis=0)
        for l in np.flatnonzero(per_uav != 1):
            raise ConstraintViolation("tb", int(l), f"UAV has {per_uav[l]} TBs")

    @classmethod
    def empty(cls, M: int, L: int, U: int, N: int) -> "Association":
        theta = np.zeros((M, L), dtype=np.int8)
        theta[0] = 1
        return cls(np.zeros((L, U, N), dtype=np.int8), theta)


@dataclass(frozen=True)
class PowerAllocation:
    """Transmit powers ``power[l, u, n]`` in watts and resulting per-UAV rates."""

    power: np.ndarray
    rates: np.ndarray | None = None
    converged: bool = True

    def validate(self, assoc: Association, peak_power, rtol: float = 1e-9) -> None:
        p = self.power
        if p.shape != assoc.eps.shape:
            raise StructureError(f"power shape {p.shape} != {assoc.eps.shape}")
        if np.any(p < 0):
            raise ConstraintViolation("power", 0, "negative transmit power")
        used = (p * assoc.eps).sum(axis=(1, 2))
        peak = np.asarray(peak_power, dtype=float)
        for l in np.flatnonzero(used > peak * (1 + rtol)):
            raise ConstraintViolation("power", int(l), f"{used[l]} W > {peak[l]} W")


@dataclass(frozen=True)
class RateTable:
    """Access rates ``access[l, u, n]`` and backhaul rates ``backhaul[m, l]``, bit/s."""

    access: np.ndarray
    backhaul: np.ndarray


@dataclass(frozen=True)
class EndToEndValue:
    per_uav: np.ndarray
    access_sum: np.ndarray
    backhaul: np.ndarray

    @property
    def total(self) -> float:
        return float(self.per_uav.sum())
