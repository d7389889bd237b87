"""Static UE geometry and the SNR -> CQI -> MCS -> transport block chain.

Pathloss is the UMi street-canyon LOS close-in model from TR 38.901 with a
per-UE log-normal shadowing term drawn once at setup; there is no fast
fading, so a UE's link quality is fixed for the whole run.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .rng import stream

MIN_DISTANCE_M = 10.0
MAX_UES = 64
MAX_CQI = 15
MAX_MCS = 28
SUBCARRIERS_PER_PRB = 12
THERMAL_NOISE_DBM_HZ = -174.0

# CQI table 2 (64QAM) of TS 38.214, spectral efficiency per CQI index.
# Index 0 is "out of range".
CQI_SPECTRAL_EFFICIENCY = (
    0.0,
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758,
    1.4766, 1.9141, 2.4063,
    2.7305, 3.3223, 3.9023, 4.5234, 5.1152, 5.5547,
)


@dataclass(frozen=True)
class McsTableEntry:
    mcs_index: int
    modulation_order: int
    code_rate_x1024: int
    spectral_efficiency: float

    @property
    def code_rate(self) -> float:
        return self.code_rate_x1024 / 1024


def _mcs_table_text() -> str:
    return resources.files("nrsim.data").joinpath("mcs_table_64qam.csv").read_text("utf-8")


@lru_cache(maxsize=None)
def mcs_table() -> tuple[McsTableEntry, ...]:
    rows = (line for line in _mcs_table_text().splitlines() if line and not line.startswith("#"))
    table = tuple(
        McsTableEntry(int(i), int(qm), int(r), float(se)) for i, qm, r, se in csv.reader(rows)
    )
    if [e.mcs_index for e in table] != list(range(MAX_MCS + 1)):
        raise ValueError("MCS table must list indices 0..28 in order")
    return table


def spectral_efficiency(mcs: int) -> float:
    return mcs_table()[mcs].spectral_efficiency


@dataclass(frozen=True)
class CarrierConfig:
    bandwidth_hz: float = 20e6
    carrier_freq_ghz: float = 3.5
    subcarrier_spacing_khz: float = 60.0
    n_prb: int = 24
    rbg_size: int = 2
    tx_power_dbm: float = 30.0
    noise_figure_db: float = 5.0
    cqi_backoff_db: float = 6.0

    def __post_init__(self):
        occupied = self.n_prb * SUBCARRIERS_PER_PRB * self.subcarrier_spacing_khz * 1e3
        if self.n_prb < 1 or occupied > self.bandwidth_hz:
            raise ValueError(
                f"{self.n_prb} PRBs at {self.subcarrier_spacing_khz} kHz do not fit "
                f"in {self.bandwidth_hz / 1e6:g} MHz"
            )
        if self.rbg_size < 1:
            raise ValueError("rbg_size must be >= 1")

    @property
    def n_rbg(self) -> int:
        return -(-self.n_prb // self.rbg_size)


@dataclass(frozen=True)
class UePosition:
    x: float
    y: float

    @property
    def distance(self) -> float:
        return math.hypot(self.x, self.y)


@dataclass(frozen=True)
class LinkQuality:
    snr_db: float
    cqi: int
    mcs: int

    @property
    def schedulable(self) -> bool:
        return self.cqi > 0


def place_ues(n: int, radius: float, seed: int) -> list[UePosition]:
    """Drop n UEs uniformly (by area) in the annulus [10 m, radius] around the gNB."""
    if not 1 <= n <= MAX_UES:
        raise ValueError(f"number of UEs must be in [1, {MAX_UES}], got {n}")
    if radius <= MIN_DISTANCE_M:
        raise ValueError(f"cell radius must exceed {MIN_DISTANCE_M} m, got {radius}")
    rng = stream(seed, "placement")
    u = rng.random(n)
    theta = rng.uniform(0.0, 2 * math.pi, n)
    r = np.sqrt(MIN_DISTANCE_M**2 + u * (radius**2 - MIN_DISTANCE_M**2))
    return [UePosition(float(ri * math.cos(t)), float(ri * math.sin(t))) for ri, t in zip(r, theta)]


def draw_shadowing(n: int, sigma_db: float, seed: int) -> list[float]:
    rng = stream(seed, "shadowing")
    return [float(v) for v in rng.normal(0.0, sigma_db, n)]


def pathloss_los_db(distance: float, fc_ghz: float) -> float:
    if distance < 1.0:
        raise ValueError(f"distance must be >= 1 m, got {distance}")
    return 32.4 + 21.0 * math.log10(distance) + 20.0 * math.log10(fc_ghz)


def noise_power_dbm(bandwidth_hz: float, noise_figure_db: float) -> float:
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth must be positive")
    return THERMAL_NOISE_DBM_HZ + 10.0 * math.log10(bandwidth_hz) + noise_figure_db


def compute_snr(tx_power_dbm: float, pathloss_db: float, shadowing_db: float, noise_dbm: float) -> float:
    return tx_power_dbm - pathloss_db - shadowing_db - noise_dbm


def snr_to_cqi(snr_db: float, backoff_db: float = 6.0) -> int:
    """Largest CQI whose spectral efficiency fits under the backed-off Shannon bound."""
    capacity = math.log2(1.0 + 10.0 ** ((snr_db - backoff_db) / 10.0))
    cqi = 0
    for idx in range(1, MAX_CQI + 1):
        if CQI_SPECTRAL_EFFICIENCY[idx] <= capacity:
            cqi = idx
        else:
            break
    return cqi


def cqi_to_mcs(cqi: int) -> int:
    """Highest MCS whose spectral efficiency does not exceed the CQI's.

    CQI 1 sits below MCS 0 and is floored to MCS 0; CQI 0 also maps to MCS 0
    but such a UE is not schedulable (see LinkQuality.schedulable).
    """
    if not 0 <= cqi <= MAX_CQI:
        raise ValueError(f"cqi must be in [0, {MAX_CQI}], got {cqi}")
    if cqi == 0:
        return 0
    target = CQI_SPECTRAL_EFFICIENCY[cqi]
    best = 0
    for entry in mcs_table():
        if entry.spectral_efficiency <= target:
            best = entry.mcs_index
    return best


def transport_block_bits(mcs: int, n_symbols: int, n_prb: int) -> int:
    if not 0 <= mcs <= MAX_MCS:
        raise ValueError(f"mcs must be in [0, {MAX_MCS}], got {mcs}")
    if n_symbols < 0 or n_prb < 1:
        raise ValueError("need n_symbols >= 0 and n_prb >= 1")
    return math.floor(n_symbols * n_prb * SUBCARRIERS_PER_PRB * spectral_efficiency(mcs))


def link_quality(distance: float, shadowing_db: float, carrier: CarrierConfig) -> LinkQuality:
    snr = compute_snr(
        carrier.tx_power_dbm,
        pathloss_los_db(distance, carrier.carrier_freq_ghz),
        shadowing_db,
        noise_power_dbm(carrier.bandwidth_hz, carrier.noise_figure_db),
    )
    cqi = snr_to_cqi(snr, carrier.cqi_backoff_db)
    return LinkQuality(snr_db=snr, cqi=cqi, mcs=cqi_to_mcs(cqi))
