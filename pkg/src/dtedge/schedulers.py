"""Scheduling and twin-placement decisions.

* :func:`build_cyclic_policy` partitions devices into ``max_aoi`` round-robin groups.
* :func:`solve_p2_static` is the optimal schedule for K = M * Gamma on a static channel.
* :func:`solve_p3_1` / :func:`solve_p3_2` solve one slot with the twins following
  the association (migrate) or staying put (forward over the backhaul).
* :func:`online_step` picks between them with the accumulated-backhaul threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from . import matching
from .environment import ChannelSnapshot
from .model import (
    Association,
    Deployment,
    InfeasibleError,
    PowerAllocation,
    Profiles,
    SlotEnergy,
    SystemParams,
    backhaul_energy,
    migration_energy,
    min_power,
    min_transmit_energy,
    require_feasible,
)


@dataclass(frozen=True)
class CyclicPolicy:
    groups: tuple[tuple[int, ...], ...]

    @property
    def period(self) -> int:
        return len(self.groups)

    def group_at(self, t: int) -> tuple[int, ...]:
        """Devices scheduled in 1-based slot ``t``."""
        return self.groups[(t - 1) % self.period]


@dataclass(frozen=True)
class SlotDecision:
    association: Association
    deployment: Deployment
    powers: PowerAllocation
    energies: SlotEnergy
    migrated: bool = False

    @property
    def scheduled(self) -> frozenset[int]:
        return frozenset(self.association)


@dataclass(frozen=True)
class OnlineState:
    deployment: Deployment
    backhaul_sum: float = 0.0
    last_migration: int = 0  # 0 = no migration yet

    def __post_init__(self) -> None:
        if self.backhaul_sum < 0:
            raise ValueError("accumulated backhaul energy must be >= 0")


@dataclass(frozen=True)
class P2Solution:
    schedule: list[Association]  # one association per slot of the cycle
    powers: list[PowerAllocation]
    total_energy: float
    total_aoi: int
    objective: float
    deployment: Deployment = field(repr=False)


def build_cyclic_policy(
    num_devices: int, num_servers: int, max_aoi: int, order: Iterable[int] | None = None
) -> CyclicPolicy:
    """Deal devices, in ``order``, into ``max_aoi`` consecutive blocks of near-equal size."""
    require_feasible(num_devices, num_servers, max_aoi)
    order = list(range(num_devices)) if order is None else [int(k) for k in order]
    if sorted(order) != list(range(num_devices)):
        raise ValueError("order must be a permutation of the device indices")
    blocks = np.array_split(np.asarray(order, dtype=np.int64), max_aoi)
    return CyclicPolicy(tuple(tuple(int(k) for k in b) for b in blocks))


def sum_aoi_closed_form(num_servers: int, max_aoi: int) -> int:
    """Total AoI over the first cycle when K = M * Gamma, for any cyclic schedule."""
    g = max_aoi
    return num_servers * (2 * g**3 + 3 * g**2 + g) // 6


def per_device_window_aoi(t_prime: int, max_aoi: int) -> int:
    """Sum of one device's AoI over the first cycle when it is served in slot ``t_prime``."""
    if not 1 <= t_prime <= max_aoi:
        raise ValueError("t_prime must lie in [1, max_aoi]")
    g = max_aoi
    # t'^2 - G t' + (G^2 + G)/2; G^2 + G is always even
    return t_prime**2 - g * t_prime + (g * g + g) // 2


def due_set(aoi, max_aoi: int) -> frozenset[int]:
    """Devices whose twin is exactly at the AoI limit and must be served now."""
    return frozenset(int(k) for k in np.flatnonzero(np.asarray(aoi) == max_aoi))


def slot_energy(
    association: Association,
    deployment: Deployment,
    prev_deployment: Deployment,
    powers: PowerAllocation,
    profiles: Profiles,
    params: SystemParams,
) -> SlotEnergy:
    """Ledger entry for one slot, rebuilt from the decision variables alone."""
    transmit = 0.0
    for k in sorted(powers):
        transmit += params.slot_duration * powers[k]
    return SlotEnergy(
        transmit=transmit,
        backhaul=backhaul_energy(association, deployment, profiles, params),
        migration=migration_energy(deployment, prev_deployment, profiles, params),
    )


def _match_due(
    due: Iterable[int],
    prev_deploy: Deployment,
    snapshot: ChannelSnapshot,
    per_bit_cost: float,
    off_host_bits: np.ndarray,
    profiles: Profiles,
    params: SystemParams,
    backend: str | None,
) -> tuple[Association, PowerAllocation]:
    rows = sorted(due)
    M = snapshot.num_servers
    if len(rows) > M:
        raise InfeasibleError(
            f"{len(rows)} devices must be served in slot {snapshot.t} but only {M} servers exist"
        )
    if not rows:
        return {}, {}
    idx = np.asarray(rows)
    gains = snapshot.h[idx, :]
    bits = profiles.sync_bits[idx, None]
    power = min_power(bits, gains, params)
    weights = params.slot_duration * power
    off_host = np.ones((len(rows), M), dtype=bool)
    off_host[np.arange(len(rows)), prev_deploy.hosts[idx]] = False
    weights = weights + off_host * (per_bit_cost * off_host_bits[idx, None])

    forbidden = power > params.max_power
    if np.any(forbidden):
        weights = np.where(forbidden, 0.0, weights)
        weights = np.where(forbidden, matching.default_pad_value(weights), weights)
    assoc = matching.solve_rectangular(weights, backend=backend)
    for k_row, m in assoc.items():
        if forbidden[k_row, m]:
            raise InfeasibleError(
                f"device {rows[k_row]} needs more than max_power={params.max_power} W in slot {snapshot.t}"
            )
    association = {rows[i]: m for i, m in sorted(assoc.items())}
    powers = {rows[i]: float(power[i, m]) for i, m in sorted(assoc.items())}
    return association, powers


def solve_p3_1(
    due: Iterable[int],
    prev_deploy: Deployment,
    snapshot: ChannelSnapshot,
    profiles: Profiles,
    params: SystemParams,
    backend: str | None = None,
) -> SlotDecision:
    """Serve ``due`` with each twin moved to the server that receives its data."""
    association, powers = _match_due(
        due, prev_deploy, snapshot, params.lam, profiles.twin_bits, profiles, params, backend
    )
    deployment = prev_deploy.with_hosts(association)
    energies = slot_energy(association, deployment, prev_deploy, powers, profiles, params)
    return SlotDecision(association, deployment, powers, energies, migrated=True)


def solve_p3_2(
    due: Iterable[int],
    prev_deploy: Deployment,
    snapshot: ChannelSnapshot,
    profiles: Profiles,
    params: SystemParams,
    backend: str | None = None,
) -> SlotDecision:
    """Serve ``due`` with twins left in place; off-host receptions pay the backhaul."""
    association, powers = _match_due(
        due, prev_deploy, snapshot, params.eta, profiles.sync_bits, profiles, params, backend
    )
    energies = slot_energy(association, prev_deploy, prev_deploy, powers, profiles, params)
    return SlotDecision(association, prev_deploy, powers, energies, migrated=False)


def migrates(backhaul_sum: float, candidate_migration: float, beta: float) -> bool:
    """Threshold test: migrate unless the accumulated backhaul is below ``beta`` x migration.

    ``beta = inf`` never migrates (also when the candidate migration costs nothing).
    """
    if math.isinf(beta):
        return False
    return not backhaul_sum < beta * candidate_migration


def online_step(
    state: OnlineState,
    group: Iterable[int],
    snapshot: ChannelSnapshot,
    profiles: Profiles,
    params: SystemParams,
    t: int | None = None,
    backend: str | None = None,
) -> tuple[SlotDecision, OnlineState]:
    group = list(group)
    t = snapshot.t if t is None else t
    candidate = solve_p3_1(group, state.deployment, snapshot, profiles, params, backend)
    if migrates(state.backhaul_sum, candidate.energies.migration, params.beta):
        return candidate, OnlineState(candidate.deployment, 0.0, t)
    stay = solve_p3_2(group, state.deployment, snapshot, profiles, params, backend)
    return stay, replace(state, backhaul_sum=state.backhaul_sum + stay.energies.backhaul)


def solve_p2_static(
    snapshot: ChannelSnapshot,
    profiles: Profiles,
    params: SystemParams,
    backend: str | None = None,
) -> P2Solution:
    """Optimal Gamma-slot schedule on a static channel with K = M * Gamma.

    Columns are the server copies ``(t, m)`` laid out as ``t * M + m``; the
    assignment cost is the minimum transmit energy, which does not depend on t.
    Twins sit where their device transmits, so backhaul and migration vanish.
    """
    K, M, G = params.num_devices, params.num_servers, params.max_aoi
    if K != M * G:
        raise ValueError(f"static optimum needs K = M * Gamma, got K={K}, M={M}, Gamma={G}")
    if snapshot.h.shape != (K, M):
        raise ValueError("snapshot shape does not match (K, M)")
    energy = min_transmit_energy(profiles.sync_bits[:, None], snapshot.h, params)
    result = matching.solve_assignment(np.tile(energy, (1, G)), backend=backend)

    schedule: list[Association] = [{} for _ in range(G)]
    powers: list[PowerAllocation] = [{} for _ in range(G)]
    hosts = np.empty(K, dtype=np.int64)
    for k, col in enumerate(result.assignment):
        t, m = divmod(int(col), M)
        schedule[t][k] = m
        powers[t][k] = float(min_power(profiles.sync_bits[k], snapshot.h[k, m], params))
        hosts[k] = m
    schedule = [dict(sorted(a.items())) for a in schedule]
    powers = [dict(sorted(p.items())) for p in powers]
    if np.any(np.concatenate([list(p.values()) for p in powers]) > params.max_power):
        raise InfeasibleError("static optimum needs more than max_power on some link")

    total_energy = 0.0
    for p in powers:
        for k in sorted(p):
            total_energy += params.slot_duration * p[k]
    total_aoi = sum_aoi_closed_form(M, G)
    objective = params.xi * total_aoi + (1.0 - params.xi) * total_energy
    return P2Solution(schedule, powers, total_energy, total_aoi, objective, Deployment(hosts))
