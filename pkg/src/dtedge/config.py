"""Run configuration: a flat ``key = value`` text file with units in the key names.

Example::

    # network
    num_servers = 40
    num_devices = 200
    max_aoi_slots = 20
    betas = 0, 0.5, 1, 5, inf

Blank lines and ``#`` comments are ignored. Sizes are given in megabytes and
converted with ``bits_per_mb`` (default 8e6, decimal MB). ``inf`` in ``betas``
selects the never-migrate boundary policy and ``0`` the migrate-every-slot
benchmark.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path

from .environment import NOISE_PSD_DBM_PER_HZ, Arena, DataRanges, noise_power
from .model import BITS_PER_MB, SystemParams, require_feasible
from .simulator import Policy


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    num_servers: int = 40
    num_devices: int = 200
    horizon_slots: int = 100
    max_aoi_slots: int = 20
    slot_duration_s: float = 0.05
    bandwidth_hz: float = 1e7
    noise_psd_dbm_per_hz: float = NOISE_PSD_DBM_PER_HZ
    xi: float = 0.1
    eta_j_per_bit: float = 1e-8
    lambda_j_per_bit: float = 1e-8
    betas: tuple[float, ...] = (0.0, 0.5, 1.0, 5.0, math.inf)
    static_optimal: bool = False
    aoi_norm: float = 1.0
    energy_norm: float = 1.0
    max_power_w: float = math.inf
    arena_side_m: float = 1000.0
    min_distance_m: float = 1.0
    sync_size_mb_min: float = 2.0
    sync_size_mb_max: float = 5.0
    twin_size_mb_min: float = 5.0
    twin_size_mb_max: float = 50.0
    bits_per_mb: float = BITS_PER_MB
    speed_mps_min: float = 2.0
    speed_mps_max: float = 8.0
    static_channel: bool = False
    realizations: int = 1000
    base_seed: int = 0
    output: str = field(default="results.csv")

    def params(self, beta: float | None = None) -> SystemParams:
        return SystemParams(
            num_servers=self.num_servers,
            num_devices=self.num_devices,
            horizon=self.horizon_slots,
            max_aoi=self.max_aoi_slots,
            slot_duration=self.slot_duration_s,
            bandwidth=self.bandwidth_hz,
            noise_power=noise_power(self.noise_psd_dbm_per_hz, self.bandwidth_hz),
            xi=self.xi,
            eta=self.eta_j_per_bit,
            lam=self.lambda_j_per_bit,
            beta=self.betas[0] if beta is None else beta,
            aoi_norm=self.aoi_norm,
            energy_norm=self.energy_norm,
            max_power=self.max_power_w,
        )

    def arena(self) -> Arena:
        return Arena(self.arena_side_m, self.min_distance_m)

    def ranges(self) -> DataRanges:
        return DataRanges(
            sync_mb=(self.sync_size_mb_min, self.sync_size_mb_max),
            twin_mb=(self.twin_size_mb_min, self.twin_size_mb_max),
            speed_mps=(self.speed_mps_min, self.speed_mps_max),
            bits_per_mb=self.bits_per_mb,
        )

    def policies(self) -> list[Policy]:
        out = [Policy.from_beta(b) for b in self.betas]
        if self.static_optimal:
            out.append(Policy("static_optimal", 0.0))
        return out

    def validate(self) -> None:
        """Raise ConfigError on bad values and InfeasibleError if K > M * Gamma."""
        if not self.betas:
            raise ConfigError("betas must list at least one value")
        try:
            self.params()
            self.arena()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.realizations < 1:
            raise ConfigError("realizations must be >= 1")
        for lo, hi, name in (
            (self.sync_size_mb_min, self.sync_size_mb_max, "sync_size_mb"),
            (self.twin_size_mb_min, self.twin_size_mb_max, "twin_size_mb"),
            (self.speed_mps_min, self.speed_mps_max, "speed_mps"),
        ):
            if not 0 <= lo <= hi:
                raise ConfigError(f"{name}_min must be in [0, {name}_max]")
        require_feasible(self.num_devices, self.num_servers, self.max_aoi_slots)


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return "inf" if math.isinf(value) else repr(value)
    return str(value)


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_value(name: str, text: str):
    default = _FIELDS[name].default
    if isinstance(default, bool):
        return _parse_bool(text)
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, tuple):
        return tuple(float(part) for part in text.split(",") if part.strip())
    return text


def loads(text: str) -> RunConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _parse_value(key, value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    return RunConfig(**values)


def dumps(config: RunConfig) -> str:
    return "".join(f"{name} = {_format(getattr(config, name))}\n" for name in _FIELDS)


def load(path: str | Path) -> RunConfig:
    return loads(Path(path).read_text(encoding="utf-8"))


def save(config: RunConfig, path: str | Path) -> None:
    Path(path).write_text(dumps(config), encoding="utf-8")
