"""Slot-by-slot episode driver, Monte Carlo aggregation and parameter sweeps."""

from __future__ import annotations

import csv
import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Sequence

import numpy as np

from .environment import Arena, DataRanges, Episode, generate_episode
from .model import (
    InfeasibleError,
    SystemParams,
    aoi_step,
    initial_aoi,
    require_feasible,
    weighted_cost,
)
from .schedulers import (
    OnlineState,
    SlotDecision,
    build_cyclic_policy,
    online_step,
    slot_energy,
    solve_p2_static,
)

POLICY_KINDS = ("online", "benchmark", "boundary", "static_optimal")
SWEEP_AXES = ("servers", "max_aoi", "beta")
Z_95 = 1.959963984540054


@dataclass(frozen=True)
class Policy:
    kind: str
    beta: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}; choose from {POLICY_KINDS}")

    @property
    def effective_beta(self) -> float:
        if self.kind == "benchmark":
            return 0.0
        if self.kind == "boundary":
            return math.inf
        return self.beta

    @classmethod
    def from_beta(cls, beta: float) -> "Policy":
        """beta=0 is the migrate-every-slot benchmark and beta=inf the never-migrate boundary."""
        if beta == 0:
            return cls("benchmark", 0.0)
        if math.isinf(beta):
            return cls("boundary", math.inf)
        return cls("online", float(beta))


@dataclass
class Trace:
    slot: np.ndarray
    aoi_sum: np.ndarray
    max_aoi: np.ndarray
    transmit: np.ndarray
    backhaul: np.ndarray
    migration: np.ndarray
    migrated: np.ndarray
    seed: int
    fingerprint: str
    num_devices: int
    decisions: list[SlotDecision] | None = None

    def __len__(self) -> int:
        return len(self.slot)

    @property
    def energy(self) -> np.ndarray:
        return self.transmit + self.backhaul + self.migration

    def same_records(self, other: "Trace") -> bool:
        fields = ("slot", "aoi_sum", "max_aoi", "transmit", "backhaul", "migration", "migrated")
        return all(np.array_equal(getattr(self, f), getattr(other, f)) for f in fields)


@dataclass(frozen=True)
class Metrics:
    avg_aoi: float
    avg_energy: float
    avg_cost: float
    aoi_ci: float
    energy_ci: float
    cost_ci: float
    realizations: int


@dataclass(frozen=True)
class SweepRow:
    value: float
    policy: Policy
    metrics: Metrics


def params_fingerprint(params: SystemParams) -> str:
    return hashlib.sha256(repr(sorted(asdict(params).items())).encode()).hexdigest()[:16]


def realization_seed(base_seed: int, i: int) -> int:
    return base_seed ^ i


def simulate(
    episode: Episode,
    params: SystemParams,
    policy: Policy,
    order=None,
    keep_decisions: bool = False,
    backend: str | None = None,
) -> Trace:
    """Run a policy over a pre-drawn episode."""
    K, T, G = params.num_devices, params.horizon, params.max_aoi
    require_feasible(K, params.num_servers, G)
    cycle = build_cyclic_policy(K, params.num_servers, G, order)

    if policy.kind == "static_optimal":
        p2 = solve_p2_static(episode.snapshots[0], episode.profiles, params, backend)
        state = OnlineState(p2.deployment)
    else:
        p2 = None
        state = OnlineState(episode.initial_deployment)
        params = replace(params, beta=policy.effective_beta)

    aoi = initial_aoi(K)
    cols = {name: np.zeros(T) for name in ("transmit", "backhaul", "migration")}
    aoi_sum = np.zeros(T, dtype=np.int64)
    aoi_max = np.zeros(T, dtype=np.int64)
    migrated = np.zeros(T, dtype=bool)
    decisions: list[SlotDecision] = []

    for t in range(1, T + 1):
        snapshot = episode.snapshots[t - 1]
        aoi_sum[t - 1] = aoi.sum()
        aoi_max[t - 1] = aoi.max()
        if p2 is not None:
            assoc = p2.schedule[(t - 1) % G]
            powers = p2.powers[(t - 1) % G]
            energies = slot_energy(assoc, p2.deployment, p2.deployment, powers, episode.profiles, params)
            decision = SlotDecision(assoc, p2.deployment, powers, energies, migrated=False)
        else:
            decision, state = online_step(
                state, cycle.group_at(t), snapshot, episode.profiles, params, t, backend
            )
        cols["transmit"][t - 1] = decision.energies.transmit
        cols["backhaul"][t - 1] = decision.energies.backhaul
        cols["migration"][t - 1] = decision.energies.migration
        migrated[t - 1] = decision.migrated
        if keep_decisions:
            decisions.append(decision)
        aoi = aoi_step(aoi, decision.association)

    return Trace(
        slot=np.arange(1, T + 1),
        aoi_sum=aoi_sum,
        max_aoi=aoi_max,
        migrated=migrated,
        seed=episode.seed,
        fingerprint=params_fingerprint(params),
        num_devices=K,
        decisions=decisions if keep_decisions else None,
        **cols,
    )


def run_episode(
    params: SystemParams,
    arena: Arena,
    policy: Policy,
    seed: int,
    ranges: DataRanges | None = None,
    static_channel: bool = False,
    order=None,
    keep_decisions: bool = False,
    backend: str | None = None,
) -> Trace:
    """Draw an episode from ``seed`` and run ``policy`` on it.

    The static optimum assumes constant gains, so it always runs on a static channel.
    """
    require_feasible(params.num_devices, params.num_servers, params.max_aoi)
    static = static_channel or policy.kind == "static_optimal"
    episode = generate_episode(params, arena, seed, ranges, static_channel=static)
    return simulate(episode, params, policy, order, keep_decisions, backend)


def _half_width(samples: np.ndarray) -> float:
    if len(samples) < 2:
        return 0.0
    return float(Z_95 * samples.std(ddof=1) / math.sqrt(len(samples)))


def aggregate(traces: Sequence[Trace], params: SystemParams) -> Metrics:
    """Pool realizations into per-device-slot means with 95% normal half-widths."""
    if not traces:
        raise ValueError("aggregate needs at least one trace")
    K, T = params.num_devices, params.horizon
    for tr in traces:
        if len(tr) != T or tr.num_devices != K:
            raise ValueError("traces do not match params (K, T)")
    aoi = np.array([tr.aoi_sum.sum() / (K * T) for tr in traces])
    energy = np.array([tr.energy.sum() / (K * T) for tr in traces])
    cost = np.array([weighted_cost(a, e, params) for a, e in zip(aoi, energy)])
    avg_aoi, avg_energy = float(aoi.mean()), float(energy.mean())
    return Metrics(
        avg_aoi=avg_aoi,
        avg_energy=avg_energy,
        avg_cost=weighted_cost(avg_aoi, avg_energy, params),
        aoi_ci=_half_width(aoi),
        energy_ci=_half_width(energy),
        cost_ci=_half_width(cost),
        realizations=len(traces),
    )


def with_axis(params: SystemParams, axis: str, value: float) -> SystemParams:
    if axis == "servers":
        return replace(params, num_servers=int(value))
    if axis == "max_aoi":
        return replace(params, max_aoi=int(value))
    if axis == "beta":
        return replace(params, beta=float(value))
    raise ValueError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")


def _realization(args) -> list[Trace]:
    params, arena, ranges, policies, seed, static_channel, backend = args
    static = static_channel or any(p.kind == "static_optimal" for p in policies)
    episode = generate_episode(params, arena, seed, ranges, static_channel=static)
    return [simulate(episode, params, p, backend=backend) for p in policies]


def sweep(
    template: SystemParams,
    axis: str,
    values: Sequence[float],
    realizations: int,
    base_seed: int,
    policies: Sequence[Policy] | None = None,
    arena: Arena | None = None,
    ranges: DataRanges | None = None,
    static_channel: bool = False,
    workers: int = 1,
    backend: str | None = None,
) -> list[SweepRow]:
    """Metrics for every (value, policy), rows sorted by policy then value.

    Realization ``i`` of every configuration uses seed ``base_seed ^ i``, so all
    policies and swept values see common random numbers. Results do not depend
    on ``workers``: realizations are reduced in index order.
    """
    if not values:
        raise ValueError("sweep needs at least one value")
    if realizations < 1:
        raise ValueError("realizations must be >= 1")
    arena = arena or Arena()
    if axis == "beta":
        configs = [(v, template) for v in values]
        policy_sets = [[Policy.from_beta(float(v))] for v in values]
    else:
        configs = [(v, with_axis(template, axis, v)) for v in values]
        policy_sets = [list(policies or [Policy.from_beta(template.beta)])] * len(values)
    for v, p in configs:
        if not (p.num_devices <= p.num_servers * p.max_aoi):
            raise InfeasibleError(
                f"infeasible sweep point {axis}={v}: K={p.num_devices} > M*Gamma={p.num_servers * p.max_aoi}"
            )

    tasks = [
        (p, arena, ranges, pols, realization_seed(base_seed, i), static_channel, backend)
        for (_, p), pols in zip(configs, policy_sets)
        for i in range(realizations)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_realization, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        results = [_realization(t) for t in tasks]

    rows = []
    for c, ((value, p), pols) in enumerate(zip(configs, policy_sets)):
        chunk = results[c * realizations : (c + 1) * realizations]
        for j, pol in enumerate(pols):
            metrics = aggregate([r[j] for r in chunk], replace(p, beta=pol.effective_beta))
            rows.append(SweepRow(float(value), pol, metrics))
    rows.sort(key=lambda r: (r.policy.kind, r.policy.beta, r.value))
    return rows


TRACE_COLUMNS = ("slot", "aoi_sum", "max_aoi", "transmit_j", "backhaul_j", "migration_j", "migrated")


def write_trace(trace: Trace, path) -> None:
    """One CSV record per slot, preceded by ``#`` lines with the seed and params fingerprint."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# seed={trace.seed}\n# fingerprint={trace.fingerprint}\n# num_devices={trace.num_devices}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for i in range(len(trace)):
            writer.writerow([
                int(trace.slot[i]),
                int(trace.aoi_sum[i]),
                int(trace.max_aoi[i]),
                repr(float(trace.transmit[i])),
                repr(float(trace.backhaul[i])),
                repr(float(trace.migration[i])),
                int(trace.migrated[i]),
            ])


def read_trace(path) -> Trace:
    meta, body = {}, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key] = value
            else:
                body.append(line)
    rows = list(csv.DictReader(body))
    col = lambda name, dtype: np.array([dtype(r[name]) for r in rows])  # noqa: E731
    return Trace(
        slot=col("slot", int),
        aoi_sum=col("aoi_sum", int),
        max_aoi=col("max_aoi", int),
        transmit=col("transmit_j", float),
        backhaul=col("backhaul_j", float),
        migration=col("migration_j", float),
        migrated=col("migrated", int).astype(bool),
        seed=int(meta["seed"]),
        fingerprint=meta["fingerprint"],
        num_devices=int(meta["num_devices"]),
    )
