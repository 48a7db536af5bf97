"""Geometry, mobility and block-fading channels for one episode.

An episode is fully determined by ``(params, arena, seed, data ranges)``.
Independent sub-streams (servers, devices, mobility, fading, profiles, initial
deployment) are spawned from one ``SeedSequence`` so that changing, say, the
number of servers does not shift the device draws.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import BITS_PER_MB, Deployment, Profiles, SystemParams

PATH_LOSS_INTERCEPT_DB = 128.1
PATH_LOSS_SLOPE_DB = 37.6
NOISE_PSD_DBM_PER_HZ = -174.0

_STREAMS = ("servers", "devices", "mobility", "fading", "profiles", "deployment")


@dataclass(frozen=True)
class Arena:
    side: float = 1000.0
    min_distance: float = 1.0

    def __post_init__(self) -> None:
        if not (self.side > 0 and self.min_distance > 0):
            raise ValueError("arena side and min_distance must be > 0")


@dataclass(frozen=True)
class MobilityDraw:
    speed: np.ndarray  # m/s, one per device
    direction: np.ndarray  # radians in [0, 2*pi)


@dataclass(frozen=True)
class ChannelSnapshot:
    h: np.ndarray  # (K, M) linear power gains
    t: int = 1

    @property
    def num_devices(self) -> int:
        return self.h.shape[0]

    @property
    def num_servers(self) -> int:
        return self.h.shape[1]


@dataclass(frozen=True)
class Topology:
    servers: np.ndarray  # (M, 2)
    devices: np.ndarray  # (T, K, 2): device positions at every slot


@dataclass(frozen=True)
class DataRanges:
    """Uniform ranges for the per-device sizes, in megabytes, and device speed."""

    sync_mb: tuple[float, float] = (2.0, 5.0)
    twin_mb: tuple[float, float] = (5.0, 50.0)
    speed_mps: tuple[float, float] = (2.0, 8.0)
    bits_per_mb: float = BITS_PER_MB


@dataclass(frozen=True)
class Episode:
    seed: int
    topology: Topology
    snapshots: list[ChannelSnapshot]
    profiles: Profiles
    initial_deployment: Deployment


def path_loss_db(d, min_distance: float = 1.0):
    """Urban macro path loss with ``d`` in metres, floored at ``min_distance``."""
    d_km = np.maximum(np.asarray(d, dtype=float), min_distance) / 1000.0
    return PATH_LOSS_INTERCEPT_DB + PATH_LOSS_SLOPE_DB * np.log10(d_km)


def channel_gain(pl_db, fading_power):
    return 10.0 ** (-np.asarray(pl_db) / 10.0) * fading_power


def noise_power(psd_dbm_per_hz: float, bandwidth: float) -> float:
    if not bandwidth > 0:
        raise ValueError("bandwidth must be > 0")
    return 10.0 ** ((psd_dbm_per_hz - 30.0) / 10.0) * bandwidth


def rayleigh_fading_power(rng: np.random.Generator, size) -> np.ndarray:
    """Unit-variance Rayleigh amplitude squared, i.e. Exp(1) power."""
    return rng.standard_exponential(size)


def _reflect(x, side: float):
    # mirror into [0, side]; period 2*side covers any overshoot length
    x = np.mod(x, 2.0 * side)
    return np.where(x > side, 2.0 * side - x, x)


def mobility_step(pos, draw: MobilityDraw, slot_duration: float, arena: Arena):
    """Move by ``speed * Ts`` along ``direction``, reflecting off the arena walls."""
    pos = np.asarray(pos, dtype=float)
    step = np.asarray(draw.speed, dtype=float) * slot_duration
    delta = np.stack([step * np.cos(draw.direction), step * np.sin(draw.direction)], axis=-1)
    return _reflect(pos + delta, arena.side)


def draw_mobility(rng: np.random.Generator, num_devices: int, speed_range) -> MobilityDraw:
    lo, hi = speed_range
    return MobilityDraw(
        speed=rng.uniform(lo, hi, num_devices),
        direction=rng.uniform(0.0, 2.0 * math.pi, num_devices),
    )


def distances(devices: np.ndarray, servers: np.ndarray) -> np.ndarray:
    """(K, M) Euclidean distances."""
    diff = devices[:, None, :] - servers[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def draw_profiles(rng: np.random.Generator, num_devices: int, ranges: DataRanges) -> Profiles:
    sync = rng.uniform(*ranges.sync_mb, num_devices) * ranges.bits_per_mb
    twin = rng.uniform(*ranges.twin_mb, num_devices) * ranges.bits_per_mb
    return Profiles(sync, twin)


def generate_episode(
    params: SystemParams,
    arena: Arena,
    seed: int,
    ranges: DataRanges | None = None,
    static_channel: bool = False,
) -> Episode:
    """Draw topology, per-slot gains, device profiles and the initial twin placement."""
    ranges = ranges or DataRanges()
    K, M, T = params.num_devices, params.num_servers, params.horizon
    children = np.random.SeedSequence(seed).spawn(len(_STREAMS))
    rng = {name: np.random.default_rng(s) for name, s in zip(_STREAMS, children)}

    servers = rng["servers"].uniform(0.0, arena.side, (M, 2))
    devices = np.empty((T, K, 2))
    devices[0] = rng["devices"].uniform(0.0, arena.side, (K, 2))
    for t in range(1, T):
        if static_channel:
            devices[t] = devices[0]
        else:
            draw = draw_mobility(rng["mobility"], K, ranges.speed_mps)
            devices[t] = mobility_step(devices[t - 1], draw, params.slot_duration, arena)

    n_fading = 1 if static_channel else T
    fading = rayleigh_fading_power(rng["fading"], (n_fading, K, M))
    snapshots = []
    for t in range(T):
        if static_channel and t > 0:
            snapshots.append(ChannelSnapshot(snapshots[0].h, t + 1))
            continue
        pl = path_loss_db(distances(devices[t], servers), arena.min_distance)
        snapshots.append(ChannelSnapshot(channel_gain(pl, fading[t]), t + 1))

    profiles = draw_profiles(rng["profiles"], K, ranges)
    initial = Deployment(rng["deployment"].integers(0, M, K))
    return Episode(seed, Topology(servers, devices), snapshots, profiles, initial)


def dump_episode(episode: Episode, path: str | Path) -> None:
    """Write one JSON record per slot (device positions and the gain matrix)."""
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "seed": episode.seed,
            "servers": episode.topology.servers.tolist(),
            "sync_bits": episode.profiles.sync_bits.tolist(),
            "twin_bits": episode.profiles.twin_bits.tolist(),
            "initial_deployment": episode.initial_deployment.hosts.tolist(),
        }
        fh.write(json.dumps({"episode": header}) + "\n")
        for snap, pos in zip(episode.snapshots, episode.topology.devices):
            fh.write(json.dumps({"t": snap.t, "devices": pos.tolist(), "h": snap.h.tolist()}) + "\n")


def load_episode(path: str | Path) -> Episode:
    with open(path, encoding="utf-8") as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    header = lines[0]["episode"]
    records = lines[1:]
    topology = Topology(
        np.array(header["servers"], dtype=float),
        np.array([r["devices"] for r in records], dtype=float),
    )
    snapshots = [ChannelSnapshot(np.array(r["h"], dtype=float), r["t"]) for r in records]
    profiles = Profiles(np.array(header["sync_bits"]), np.array(header["twin_bits"]))
    return Episode(header["seed"], topology, snapshots, profiles, Deployment(header["initial_deployment"]))
