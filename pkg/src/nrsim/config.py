"""Scenario configuration: the simulation parameter table plus seeds, policy,
traffic and RIC settings. Loaded from YAML; every field has a default."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from .channel import MAX_UES, CarrierConfig
from .frame import MAX_MU, slot_duration
from .sched import POLICY_NAMES
from .traffic import TrafficMode


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists every offending field."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in self.problems))


@dataclass(frozen=True)
class RicConfig:
    report_period: int = 40
    a1_policy: dict | None = None  # parsed A1 document; None means static on the initial policy
    e2_socket: str | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    bandwidth_hz: float = 20e6
    mu: int = 2
    carrier_freq_ghz: float = 3.5
    packet_bytes: int = 1000
    n_gnb: int = 1
    n_ues: int = 7
    duration_ttis: int = 12000
    demand_classes: int = 3
    mcs_table: str = "64qam"
    channel_model: str = "umi-street-canyon-los"

    seed: int = 1
    policy: str = "rr"
    traffic: str = "full_buffer"
    direction_mix: float = 0.5
    tx_power_dbm: float = 30.0
    noise_figure_db: float = 5.0
    cell_radius_m: float = 200.0
    shadowing_sigma_db: float = 4.0
    cqi_backoff_db: float = 6.0
    n_prb: int = 24
    rbg_size: int = 2
    pf_time_constant: float = 100.0
    warmup_ttis: int = 400
    fixed_demand_class: int | None = None  # every UE gets this class instead of ue_id % 3 + 1
    ric: RicConfig = field(default_factory=RicConfig)

    def __post_init__(self):
        if isinstance(self.ric, dict):
            object.__setattr__(self, "ric", RicConfig(**self.ric))
        problems = self.problems()
        if problems:
            raise ConfigError(problems)

    def problems(self) -> list[str]:
        p = []
        if self.n_gnb != 1:
            p.append(f"n_gnb must be 1, got {self.n_gnb}")
        if not isinstance(self.n_ues, int) or not 1 <= self.n_ues <= MAX_UES:
            p.append(f"n_ues must be an integer in [1, {MAX_UES}], got {self.n_ues!r}")
        if not isinstance(self.duration_ttis, int) or self.duration_ttis < 1:
            p.append(f"duration_ttis must be >= 1, got {self.duration_ttis!r}")
        if not isinstance(self.mu, int) or not 0 <= self.mu <= MAX_MU:
            p.append(f"mu must be an integer in [0, {MAX_MU}], got {self.mu!r}")
        if self.policy not in POLICY_NAMES:
            p.append(f"policy must be one of {POLICY_NAMES}, got {self.policy!r}")
        if self.packet_bytes < 1:
            p.append("packet_bytes must be positive")
        if self.demand_classes != 3:
            p.append("only the three demand classes (1-3 symbols) are supported")
        if self.mcs_table != "64qam":
            p.append(f"unsupported mcs_table {self.mcs_table!r}")
        if self.warmup_ttis < 0:
            p.append("warmup_ttis must be >= 0")
        if self.pf_time_constant < 1:
            p.append("pf_time_constant must be >= 1")
        if self.cell_radius_m <= 10:
            p.append("cell_radius_m must exceed 10 m")
        if not 0 <= self.direction_mix <= 1:
            p.append("direction_mix must lie in [0, 1]")
        if self.fixed_demand_class is not None and self.fixed_demand_class not in (1, 2, 3):
            p.append(f"fixed_demand_class must be 1, 2 or 3, got {self.fixed_demand_class!r}")
        if self.ric.report_period < 1:
            p.append("ric.report_period must be >= 1")
        try:
            TrafficMode.parse(self.traffic)
        except ValueError as e:
            p.append(str(e))
        try:
            self.carrier
        except ValueError as e:
            p.append(str(e))
        return p

    @property
    def carrier(self) -> CarrierConfig:
        return CarrierConfig(
            bandwidth_hz=self.bandwidth_hz,
            carrier_freq_ghz=self.carrier_freq_ghz,
            subcarrier_spacing_khz=15.0 * 2 ** self.mu,
            n_prb=self.n_prb,
            rbg_size=self.rbg_size,
            tx_power_dbm=self.tx_power_dbm,
            noise_figure_db=self.noise_figure_db,
            cqi_backoff_db=self.cqi_backoff_db,
        )

    @property
    def traffic_mode(self) -> TrafficMode:
        return TrafficMode.parse(self.traffic)

    @property
    def slot_ms(self) -> float:
        return slot_duration(self.mu)

    @property
    def measurement_start(self) -> int:
        """First measured TTI; the warm-up is skipped only when the run is long enough."""
        return self.warmup_ttis if self.warmup_ttis < self.duration_ttis else 0

    def replace(self, **changes) -> "ScenarioConfig":
        if "ric" in changes and isinstance(changes["ric"], dict):
            changes["ric"] = dataclasses.replace(self.ric, **changes["ric"])
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


def config_from_dict(data: dict[str, Any] | None) -> ScenarioConfig:
    data = dict(data or {})
    known = {f.name for f in fields(ScenarioConfig)}
    unknown = sorted(set(data) - known - {"sweep"})
    problems = [f"unknown config key {k!r}" for k in unknown]
    data.pop("sweep", None)
    ric = data.pop("ric", None) or {}
    ric_known = {f.name for f in fields(RicConfig)}
    problems += [f"unknown config key 'ric.{k}'" for k in sorted(set(ric) - ric_known)]
    values = {}
    for f in fields(ScenarioConfig):
        if f.name in data and f.name != "ric":
            try:
                values[f.name] = _coerce(f.default, data[f.name])
            except (TypeError, ValueError):
                problems.append(f"{f.name} must be of type {type(f.default).__name__}, got {data[f.name]!r}")
    if problems:
        raise ConfigError(problems)
    try:
        ric = {k: _coerce(getattr(RicConfig, k), v) for k, v in ric.items()}
    except (TypeError, ValueError):
        problems.append(f"ric.report_period must be of type int, got {ric.get('report_period')!r}")
    if problems:
        raise ConfigError(problems)
    return ScenarioConfig(**values, ric=RicConfig(**ric))


def _coerce(default, value):
    """Match YAML scalars to the field's type; YAML 1.1 reads ``2e6`` as a string."""
    if value is None or isinstance(default, bool) or default is None or isinstance(default, str):
        return value
    if isinstance(default, float) and not isinstance(value, bool):
        return float(value)
    if isinstance(default, int) and isinstance(value, str):
        return int(value)
    return value


def load_yaml(path: str | Path) -> dict[str, Any]:
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigError([f"{path}: top level must be a mapping"])
    return data


def load_config(path: str | Path) -> ScenarioConfig:
    return config_from_dict(load_yaml(path))
