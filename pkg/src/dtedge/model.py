"""Domain types and closed-form physical / cost formulas.

Everything here is pure and deterministic. Indices are 0-based: device ``k``
is row ``k`` of a channel matrix and server ``m`` is column ``m``.

Units are SI throughout: bits, seconds, hertz, watts, joules. Data sizes that
users state in megabytes are converted with ``BITS_PER_MB`` (decimal MB).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

BITS_PER_MB = 8e6

#: device -> server for the devices scheduled in one slot
Association = dict[int, int]
#: device -> transmit power (W) for the scheduled devices
PowerAllocation = dict[int, float]


class DomainError(ValueError):
    """An argument is outside the domain of a physical formula."""


class InfeasibleError(ValueError):
    """A configuration or one-slot problem admits no feasible solution."""


@dataclass(frozen=True)
class SystemParams:
    num_servers: int
    num_devices: int
    horizon: int = 100
    max_aoi: int = 20
    slot_duration: float = 0.05
    bandwidth: float = 1e7
    noise_power: float = 10 ** ((-174.0 - 30.0) / 10.0) * 1e7
    xi: float = 0.1
    eta: float = 1e-8
    lam: float = 1e-8
    beta: float = 1.0
    aoi_norm: float = 1.0
    energy_norm: float = 1.0
    # no cap unless configured; exceeding a finite cap is an infeasibility
    max_power: float = math.inf

    def __post_init__(self) -> None:
        for name in ("num_servers", "num_devices", "horizon", "max_aoi"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if not self.slot_duration > 0:
            raise ValueError("slot_duration must be > 0")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be > 0")
        if not self.noise_power > 0:
            raise ValueError("noise_power must be > 0")
        if not 0.0 <= self.xi <= 1.0:
            raise ValueError("xi must lie in [0, 1]")
        if self.eta < 0 or self.lam < 0:
            raise ValueError("eta and lam must be >= 0")
        if not self.beta >= 0:
            raise ValueError("beta must be >= 0 (inf allowed)")
        if not (self.aoi_norm > 0 and self.energy_norm > 0):
            raise ValueError("normalization divisors must be > 0")
        if not self.max_power > 0:
            raise ValueError("max_power must be > 0")

    @property
    def bits_per_slot(self) -> float:
        """Bits a unit-SNR link would move in one slot (B * Ts)."""
        return self.bandwidth * self.slot_duration


@dataclass(frozen=True)
class DeviceProfile:
    sync_bits: float
    twin_bits: float

    def __post_init__(self) -> None:
        if not (self.sync_bits > 0 and self.twin_bits > 0):
            raise ValueError("sync_bits and twin_bits must be > 0")


@dataclass(frozen=True)
class Profiles:
    """Column view of the per-device profiles, shape ``(K,)`` each."""

    sync_bits: np.ndarray
    twin_bits: np.ndarray

    def __post_init__(self) -> None:
        if self.sync_bits.shape != self.twin_bits.shape or self.sync_bits.ndim != 1:
            raise ValueError("sync_bits and twin_bits must be 1-D arrays of equal length")
        if np.any(self.sync_bits <= 0) or np.any(self.twin_bits <= 0):
            raise ValueError("data sizes must be > 0")

    @classmethod
    def from_devices(cls, devices: list[DeviceProfile]) -> "Profiles":
        return cls(
            np.array([d.sync_bits for d in devices], dtype=float),
            np.array([d.twin_bits for d in devices], dtype=float),
        )

    def __len__(self) -> int:
        return len(self.sync_bits)

    def __getitem__(self, k: int) -> DeviceProfile:
        return DeviceProfile(float(self.sync_bits[k]), float(self.twin_bits[k]))


@dataclass(frozen=True)
class SlotEnergy:
    transmit: float = 0.0
    backhaul: float = 0.0
    migration: float = 0.0

    def __post_init__(self) -> None:
        if min(self.transmit, self.backhaul, self.migration) < 0:
            raise ValueError("energies must be >= 0")

    @property
    def total(self) -> float:
        return self.transmit + self.backhaul + self.migration


@dataclass(frozen=True)
class Deployment:
    """Host server of every device's twin (a total map, stored as an int array)."""

    hosts: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        hosts = np.asarray(self.hosts, dtype=np.int64)
        if hosts.ndim != 1:
            raise ValueError("deployment must be one host per device")
        if np.any(hosts < 0):
            raise ValueError("server indices must be >= 0")
        hosts = hosts.copy()
        hosts.setflags(write=False)
        object.__setattr__(self, "hosts", hosts)

    def __len__(self) -> int:
        return len(self.hosts)

    def __getitem__(self, k: int) -> int:
        return int(self.hosts[k])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Deployment):
            return NotImplemented
        return np.array_equal(self.hosts, other.hosts)

    def __hash__(self) -> int:
        return hash(self.hosts.tobytes())

    def with_hosts(self, updates: Mapping[int, int]) -> "Deployment":
        hosts = self.hosts.copy()
        for k, m in updates.items():
            hosts[k] = m
        return Deployment(hosts)


def validate_association(assoc: Association, num_devices: int, num_servers: int) -> None:
    """Raise unless ``assoc`` puts at most one device on each server."""
    servers = list(assoc.values())
    if len(set(servers)) != len(servers):
        raise ValueError("association assigns two devices to one server")
    for k, m in assoc.items():
        if not (0 <= k < num_devices and 0 <= m < num_servers):
            raise ValueError(f"association entry {k}->{m} out of range")


def _require_positive_gain(h) -> None:
    if np.any(np.asarray(h) <= 0):
        raise DomainError("channel gain must be > 0 (unreachable device)")


def transmit_rate(h, p, params: SystemParams):
    """Shannon rate ``B log2(1 + h p / sigma^2)`` in bits/s."""
    _require_positive_gain(h)
    if np.any(np.asarray(p) < 0):
        raise DomainError("transmit power must be >= 0")
    return params.bandwidth * np.log2(1.0 + np.asarray(h) * p / params.noise_power)


def min_power(sync_bits, h, params: SystemParams):
    """Smallest power that delivers ``sync_bits`` within one slot.

    Energy grows with power, so the deadline-tight power is also the
    energy-optimal one.
    """
    _require_positive_gain(h)
    if np.any(np.asarray(sync_bits) <= 0):
        raise DomainError("data size must be > 0")
    spectral = np.asarray(sync_bits) / params.bits_per_slot
    return params.noise_power * np.expm1(spectral * math.log(2.0)) / np.asarray(h)


def min_transmit_energy(sync_bits, h, params: SystemParams):
    """Transmit energy at :func:`min_power`; equals ``Ts * p*``."""
    return params.slot_duration * min_power(sync_bits, h, params)


def transmit_energy(sync_bits, h, p, params: SystemParams):
    """Energy ``D p / R(p)`` of sending ``sync_bits`` at an arbitrary power."""
    return np.asarray(sync_bits) * p / transmit_rate(h, p, params)


def backhaul_energy(
    assoc: Association, deploy: Deployment, profiles: Profiles, params: SystemParams
) -> float:
    """Forwarding cost for scheduled devices received away from their twin's host."""
    total = 0.0
    for k in sorted(assoc):
        if assoc[k] != deploy[k]:
            total += params.eta * float(profiles.sync_bits[k])
    return total


def migration_energy(
    deploy_t: Deployment, deploy_prev: Deployment, profiles: Profiles, params: SystemParams
) -> float:
    """Cost of moving every twin whose host changed since the previous slot."""
    if len(deploy_t) != len(deploy_prev):
        raise ValueError("deployments cover different device sets")
    moved = np.flatnonzero(deploy_t.hosts != deploy_prev.hosts)
    total = 0.0
    for k in moved:
        total += params.lam * float(profiles.twin_bits[k])
    return total


def aoi_step(aoi: np.ndarray, scheduled) -> np.ndarray:
    """Age every twin by one slot; synchronized twins restart at 1."""
    nxt = np.asarray(aoi, dtype=np.int64) + 1
    idx = np.fromiter(scheduled, dtype=np.int64)
    nxt[idx] = 1
    return nxt


def initial_aoi(num_devices: int) -> np.ndarray:
    return np.ones(num_devices, dtype=np.int64)


def weighted_cost(avg_aoi: float, avg_energy: float, params: SystemParams) -> float:
    return params.xi * (avg_aoi / params.aoi_norm) + (1.0 - params.xi) * (
        avg_energy / params.energy_norm
    )


def feasibility_p1(num_devices: int, num_servers: int, max_aoi: int) -> bool:
    """Every device can be refreshed once per ``max_aoi`` slots iff K <= M * Gamma."""
    return num_devices <= num_servers * max_aoi


def require_feasible(num_devices: int, num_servers: int, max_aoi: int) -> None:
    if not feasibility_p1(num_devices, num_servers, max_aoi):
        raise InfeasibleError(
            f"infeasible: K={num_devices} devices exceed M*Gamma={num_servers}*{max_aoi}"
            f"={num_servers * max_aoi}; the max-AoI constraint needs K <= M*Gamma"
        )
