"""Brute-force reference checks for the solvers and closed forms.

Every check compares a fast path against a route that shares none of its
logic: permutation enumeration instead of matching, grid search instead of
the optimal-power formula, slot-by-slot AoI simulation instead of the
closed-form sums. ``run_all`` backs the ``validate`` command.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import matching, model, schedulers
from .environment import ChannelSnapshot
from .model import Deployment, Profiles, SystemParams

REL_TOL = 1e-9


@dataclass
class CheckResult:
    name: str
    instances: int = 0
    max_error: float = 0.0
    failure: dict | None = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.failure is None

    def record(self, error: float, tol: float, instance: Callable[[], dict]) -> None:
        self.instances += 1
        self.max_error = max(self.max_error, error)
        if error > tol and self.failure is None:
            self.failure = instance()


def rel_err(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


# -- enumeration oracles ------------------------------------------------------


def brute_force_assignment(costs) -> float:
    """Minimum over every permutation of a square matrix."""
    c = np.asarray(costs, dtype=float)
    n = c.shape[0]
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    return float(c[np.arange(n), perms].sum(axis=1).min())


def brute_force_rectangular(costs) -> tuple[float, dict[int, int]]:
    """Best injective map of the r rows into the c >= r columns."""
    c = np.asarray(costs, dtype=float)
    r, k = c.shape
    best, best_map = math.inf, {}
    for cols in itertools.permutations(range(k), r):
        total = float(sum(c[i, j] for i, j in enumerate(cols)))
        if total < best:
            best, best_map = total, dict(enumerate(cols))
    return best, best_map


def enumerate_aoi_of_schedule(schedule: list[set[int]], num_devices: int) -> int:
    """Total AoI over len(schedule) slots, stepping the recursion directly."""
    aoi = [1] * num_devices
    total = 0
    for served in schedule:
        total += sum(aoi)
        aoi = [1 if k in served else a + 1 for k, a in enumerate(aoi)]
    return total


def brute_force_p2(snapshot: ChannelSnapshot, profiles: Profiles, params: SystemParams) -> float:
    """Best xi * AoI + (1 - xi) * energy over every placement of K devices into (slot, server) cells."""
    K, M, G = params.num_devices, params.num_servers, params.max_aoi
    cells = [(t, m) for t in range(G) for m in range(M)]
    energy = [
        [float(model.transmit_energy(profiles.sync_bits[k], snapshot.h[k, m],
                                     model.min_power(profiles.sync_bits[k], snapshot.h[k, m], params), params))
         for m in range(M)]
        for k in range(K)
    ]
    best = math.inf
    for perm in itertools.permutations(range(K)):
        schedule = [set() for _ in range(G)]
        e = 0.0
        for k, cell in enumerate(perm):
            t, m = cells[cell]
            schedule[t].add(k)
            e += energy[k][m]
        aoi = enumerate_aoi_of_schedule(schedule, K)
        best = min(best, params.xi * aoi + (1 - params.xi) * e)
    return best


def brute_force_p3(
    due: list[int],
    prev: Deployment,
    snapshot: ChannelSnapshot,
    profiles: Profiles,
    params: SystemParams,
    migrate: bool,
) -> float:
    """Minimum one-slot energy over every injective device-to-server map."""
    best = math.inf
    for servers in itertools.permutations(range(snapshot.num_servers), len(due)):
        assoc = dict(zip(due, servers))
        deploy = prev.with_hosts(assoc) if migrate else prev
        total = model.backhaul_energy(assoc, deploy, profiles, params)
        total += model.migration_energy(deploy, prev, profiles, params)
        for k, m in assoc.items():
            total += float(model.min_transmit_energy(profiles.sync_bits[k], snapshot.h[k, m], params))
        best = min(best, total)
    return best


def grid_min_energy(sync_bits: float, h: float, params: SystemParams, points: int = 10_000) -> float:
    """Minimum of D p / R(p) over a geometric grid of deadline-feasible powers.

    The deadline boundary is bracketed by bisection on the rate, never by the
    closed form.
    """
    lo, hi = 0.0, params.noise_power / h
    while sync_bits / float(model.transmit_rate(h, hi, params)) > params.slot_duration:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if sync_bits / float(model.transmit_rate(h, mid, params)) > params.slot_duration:
            lo = mid
        else:
            hi = mid
    grid = np.geomspace(hi / 10.0, hi * 100.0, points)
    grid = grid[sync_bits / model.transmit_rate(h, grid, params) <= params.slot_duration]
    return float(np.min(model.transmit_energy(sync_bits, h, grid, params)))


# -- random instances ---------------------------------------------------------


def random_params(rng: np.random.Generator, **overrides) -> SystemParams:
    slot = float(rng.uniform(0.01, 0.1))
    bandwidth = float(rng.uniform(1e5, 1e7))
    base = dict(
        num_servers=int(rng.integers(1, 4)),
        num_devices=3,
        horizon=10,
        max_aoi=3,
        slot_duration=slot,
        bandwidth=bandwidth,
        noise_power=float(10 ** rng.uniform(-14, -9)),
        xi=float(rng.uniform(0, 1)),
        # per-bit costs scaled so a forwarded sync or a moved twin costs O(1) J
        eta=float(10 ** rng.uniform(-1, 0.5)) / (bandwidth * slot),
        lam=float(10 ** rng.uniform(-9, -7)),
    )
    base.update(overrides)
    return SystemParams(**base)


def random_instance(rng: np.random.Generator, params: SystemParams):
    """Gains and sizes scaled so transmit, backhaul and migration terms are comparable."""
    K, M = params.num_devices, params.num_servers
    sync = rng.uniform(0.5, 3.0, K) * params.bits_per_slot
    twin = rng.uniform(0.5, 5.0, K) / params.lam
    # Ts * sigma^2 / h spans 0.1..10 J, times (2^x - 1) for x = D / (B Ts)
    h = params.noise_power * params.slot_duration * 10 ** rng.uniform(-1, 1, (K, M))
    return ChannelSnapshot(h), Profiles(sync, twin)


# -- suites -------------------------------------------------------------------


def check_assignment(rng, size_limit: int, count: int = 500) -> CheckResult:
    res = CheckResult("assignment_vs_enumeration")
    for _ in range(count):
        n = int(rng.integers(1, size_limit + 1))
        c = rng.random((n, n))
        oracle = brute_force_assignment(c)
        for backend in matching.BACKENDS:
            got = matching.solve_assignment(c, backend=backend).total_cost
            res.record(rel_err(got, oracle), REL_TOL,
                       lambda: {"backend": backend, "costs": c.tolist(), "expected": oracle, "got": got})
    return res


def check_padding(rng, size_limit: int, count: int = 100) -> CheckResult:
    res = CheckResult("padding_vs_enumeration")
    for _ in range(count):
        cols = int(rng.integers(1, size_limit + 1))
        rows = int(rng.integers(1, cols + 1))
        c = rng.random((rows, cols))
        oracle, _ = brute_force_rectangular(c)
        got_map = matching.solve_rectangular(c)
        got = float(sum(c[i, j] for i, j in got_map.items()))
        res.record(rel_err(got, oracle), REL_TOL,
                   lambda: {"costs": c.tolist(), "expected": oracle, "got": got})
    return res


def check_p2(rng, size_limit: int, count: int = 100) -> CheckResult:
    res = CheckResult("p2_vs_enumeration")
    kmax = min(6, size_limit)
    shapes = [(m, g) for m in range(1, 4) for g in range(1, 7) if m * g <= kmax]
    for _ in range(count):
        m, g = shapes[int(rng.integers(len(shapes)))]
        params = random_params(rng, num_servers=m, max_aoi=g, num_devices=m * g)
        snap, prof = random_instance(rng, params)
        sol = schedulers.solve_p2_static(snap, prof, params)
        oracle = brute_force_p2(snap, prof, params)
        res.record(rel_err(sol.objective, oracle), REL_TOL,
                   lambda: {"M": m, "Gamma": g, "h": snap.h.tolist(), "sync_bits": prof.sync_bits.tolist(),
                            "xi": params.xi, "expected": oracle, "got": sol.objective})
    return res


def check_p3(rng, size_limit: int, migrate: bool, count: int = 100) -> CheckResult:
    res = CheckResult("p3_1_vs_enumeration" if migrate else "p3_2_vs_enumeration")
    solver = schedulers.solve_p3_1 if migrate else schedulers.solve_p3_2
    for _ in range(count):
        M = int(rng.integers(1, min(3, size_limit) + 1))
        K = int(rng.integers(1, min(6, size_limit) + 1))
        params = random_params(rng, num_servers=M, num_devices=K)
        snap, prof = random_instance(rng, params)
        prev = Deployment(rng.integers(0, M, K))
        due = sorted(rng.choice(K, size=int(rng.integers(0, min(K, M) + 1)), replace=False).tolist())
        dec = solver(due, prev, snap, prof, params)
        got = dec.energies.total
        oracle = brute_force_p3(due, prev, snap, prof, params, migrate)
        err = rel_err(got, oracle) if due else abs(got - oracle)
        res.record(err, REL_TOL,
                   lambda: {"due": due, "prev": prev.hosts.tolist(), "h": snap.h.tolist(),
                            "sync_bits": prof.sync_bits.tolist(), "twin_bits": prof.twin_bits.tolist(),
                            "expected": oracle, "got": got})
    return res


def check_closed_form_aoi(rng, count: int = 50) -> CheckResult:
    res = CheckResult("closed_form_aoi_vs_simulation")
    for _ in range(count):
        M, G = int(rng.integers(1, 6)), int(rng.integers(1, 7))
        K = M * G
        order = rng.permutation(K)
        policy = schedulers.build_cyclic_policy(K, M, G, order)
        aoi, total = model.initial_aoi(K), 0
        for t in range(1, G + 1):
            total += int(aoi.sum())
            aoi = model.aoi_step(aoi, policy.group_at(t))
        expected = schedulers.sum_aoi_closed_form(M, G)
        res.record(float(abs(total - expected)), 0.0,
                   lambda: {"M": M, "Gamma": G, "order": order.tolist(), "simulated": total, "closed_form": expected})
    return res


def check_window_aoi(max_gamma: int = 30) -> CheckResult:
    res = CheckResult("window_aoi_vs_loop")
    for g in range(1, max_gamma + 1):
        for tp in range(1, g + 1):
            loop = sum(range(1, tp + 1)) + sum(range(1, g - tp + 1))
            got = schedulers.per_device_window_aoi(tp, g)
            res.record(float(abs(got - loop)), 0.0, lambda: {"t_prime": tp, "Gamma": g, "loop": loop, "got": got})
    return res


def check_min_power(rng, count: int = 1000, points: int = 10_000) -> CheckResult:
    """Closed-form energy never exceeds a grid search, and meets the deadline exactly."""
    res = CheckResult("optimal_power_vs_grid")
    deadline_err = 0.0
    for _ in range(count):
        params = random_params(rng)
        h = float(10 ** rng.uniform(-13, -7))
        D = float(rng.uniform(0.1, 8.0) * params.bits_per_slot)
        closed = float(model.min_transmit_energy(D, h, params))
        grid = grid_min_energy(D, h, params, points)
        p_star = float(model.min_power(D, h, params))
        t_err = rel_err(D / float(model.transmit_rate(h, p_star, params)), params.slot_duration)
        deadline_err = max(deadline_err, t_err)
        excess = max(0.0, (closed - grid) / grid)
        res.record(max(excess, t_err), REL_TOL,
                   lambda: {"D": D, "h": h, "B": params.bandwidth, "Ts": params.slot_duration,
                            "noise": params.noise_power, "closed": closed, "grid": grid})
    res.details["max_deadline_rel_error"] = deadline_err
    return res


def run_all(size_limit: int = 7, seed: int = 0) -> list[CheckResult]:
    if not 1 <= size_limit <= 7:
        raise ValueError("size_limit must lie in [1, 7] (enumeration grows as n!)")
    rng = np.random.default_rng(seed)
    return [
        check_assignment(rng, size_limit),
        check_padding(rng, min(size_limit, 6)),
        check_p2(rng, size_limit),
        check_p3(rng, size_limit, migrate=True),
        check_p3(rng, size_limit, migrate=False),
        check_closed_form_aoi(rng),
        check_window_aoi(),
        check_min_power(rng),
    ]
