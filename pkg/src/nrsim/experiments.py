"""Parameter sweeps, CSV output and the figure data sets."""
from __future__ import annotations

import csv
import logging
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .channel import MAX_MCS, transport_block_bits
from .config import ScenarioConfig
from .engine import run
from .metrics import CellSummary, UeStats
from .sched import POLICY_NAMES

log = logging.getLogger(__name__)

SUMMARY_HEADER = ("policy", "n_ues", "seed", "avg_ue_throughput_mbps", "cell_throughput_mbps",
                  "avg_delay_ms", "jain")
PER_UE_HEADER = ("policy", "n_ues", "seed", "ue_id", "direction", "demand_class", "throughput_mbps",
                 "mean_delay_ms", "mean_mcs", "tti_allocation_pct", "mean_symbols")
FIG5_HEADER = ("policy", "n_ues", "seeds", "avg_ue_throughput_mbps", "mean_flow_throughput_mbps",
               "cell_throughput_mbps")
FIG6_HEADER = ("policy", "n_ues", "seeds", "avg_delay_ms")
FIG7_8_HEADER = ("ue_id", "direction", "demand_class", "throughput_mbps", "mean_delay_ms", "mean_mcs",
                 "tti_allocation_pct", "mean_symbols")

# Every UE gets the demand class of the lone UE in the default layout (UE 0,
# class 1), so changing n_ues changes only the number of users, not the mix.
CONTROLLED_DEMAND = {"fixed_demand_class": 1}
# Low transmit power spreads CQI over the 10-200 m annulus (MCS roughly 5-20);
# the heaviest demand class keeps the cell saturated so the policies differ.
HETEROGENEOUS = {"tx_power_dbm": 5.0, "fixed_demand_class": 3}
FIGURE_SEEDS = 5
DELAY_LOAD_FRACTION = 0.6


def fmt(x: float) -> str:
    """Fixed CSV float format: identical inputs give identical bytes."""
    return f"{x:.6f}"


def flow_capacity_mbps(symbols: int, mcs: int, n_prb: int, slot_ms: float) -> float:
    """Most one (UE, direction) can carry: ``symbols`` full-band symbols per slot at ``mcs``."""
    return symbols * transport_block_bits(mcs, 1, n_prb) / (slot_ms * 1e3)


def single_ue_capacity_mbps(config: ScenarioConfig, demand_class: int | None = None) -> float:
    """Per-direction capacity of a lone UE at the top MCS.

    The class defaults to the config's fixed class, else to UE 0's class (1).
    """
    if demand_class is None:
        demand_class = config.fixed_demand_class or 1
    return flow_capacity_mbps(demand_class, MAX_MCS, config.n_prb, config.slot_ms)


def heterogeneous(base: ScenarioConfig | None = None, **changes) -> ScenarioConfig:
    return (base or ScenarioConfig()).replace(**{**HETEROGENEOUS, **changes})


@dataclass(frozen=True)
class Cell:
    policy: str
    n_ues: int
    seed: int


@dataclass
class CellResult:
    cell: Cell
    summary: CellSummary | None = None
    ue_stats: list[UeStats] = field(default_factory=list)
    error: str | None = None
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.error is None and not self.violations


def check_invariants(config: ScenarioConfig, summary: CellSummary, stats: Sequence[UeStats],
                     window_ms: float) -> list[str]:
    """Sanity bounds every finished run must satisfy."""
    out = []
    # a packet partly sent before the window opens is counted whole when it lands
    slack = 8 * config.packet_bytes / (window_ms * 1e3) + 1e-9
    for s in stats:
        cap = flow_capacity_mbps(s.demand_class, int(round(s.mean_mcs)) if s.served else 0,
                                 config.n_prb, config.slot_ms)
        if s.throughput_mbps < 0:
            out.append(f"UE {s.ue_id} {s.direction.value}: negative throughput")
        if s.served and s.throughput_mbps > cap + slack:
            out.append(f"UE {s.ue_id} {s.direction.value}: throughput {s.throughput_mbps:.4f} "
                       f"above its capacity {cap:.4f} Mbps")
        if s.mean_delay_ms < 0:
            out.append(f"UE {s.ue_id} {s.direction.value}: negative delay")
        if not 0.0 <= s.tti_allocation_pct <= 100.0:
            out.append(f"UE {s.ue_id} {s.direction.value}: TTI allocation {s.tti_allocation_pct} outside [0, 100]")
        if s.served and s.mean_symbols_per_alloc > s.demand_class:
            out.append(f"UE {s.ue_id} {s.direction.value}: more symbols than its demand class")
    cell_cap = flow_capacity_mbps(12, MAX_MCS, config.n_prb, config.slot_ms)
    if summary.cell_throughput_mbps > cell_cap + 2 * config.n_ues * slack:
        out.append(f"cell throughput {summary.cell_throughput_mbps:.4f} above {cell_cap:.4f} Mbps")
    if not 0.0 < summary.jain <= 1.0 + 1e-12:
        out.append(f"jain index {summary.jain} outside (0, 1]")
    return out


def run_cell(config: ScenarioConfig, cell: Cell) -> CellResult:
    """Run one (policy, n_ues, seed) cell; failures are captured, not raised."""
    result = CellResult(cell)
    try:
        cfg = config.replace(policy=cell.policy, n_ues=cell.n_ues, seed=cell.seed)
        r = run(cfg)
        result.summary = r.summary
        result.ue_stats = r.ue_stats
        result.violations = check_invariants(cfg, r.summary, r.ue_stats, r.window.duration_ms)
    except Exception as e:  # reported per cell; the rest of the sweep carries on
        result.error = f"{type(e).__name__}: {e}"
        log.debug("cell %s failed:\n%s", cell, traceback.format_exc())
    return result


def _run_cell_args(args):
    return run_cell(*args)


def sweep(config: ScenarioConfig, policies: Iterable[str] = POLICY_NAMES,
          n_values: Iterable[int] = range(1, 11), seeds: Iterable[int] = (1,),
          jobs: int = 1) -> list[CellResult]:
    """All (policy, n_ues, seed) cells, in that nesting order, on up to ``jobs`` processes."""
    cells = [Cell(p, n, s) for p in policies for n in n_values for s in seeds]
    if jobs <= 1 or len(cells) <= 1 or config.ric.e2_socket:
        return [run_cell(config, c) for c in cells]
    with ProcessPoolExecutor(max_workers=min(jobs, len(cells))) as pool:
        return list(pool.map(_run_cell_args, [(config, c) for c in cells]))


def default_jobs() -> int:
    return os.cpu_count() or 1


def write_summary_csv(path: str | Path, results: Sequence[CellResult]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for r in results:
            if r.summary is None:
                continue
            s = r.summary
            w.writerow([r.cell.policy, r.cell.n_ues, r.cell.seed, fmt(s.avg_ue_throughput_mbps),
                        fmt(s.cell_throughput_mbps), fmt(s.avg_delay_ms), fmt(s.jain)])


def write_per_ue_csv(path: str | Path, results: Sequence[CellResult]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PER_UE_HEADER)
        for r in results:
            for s in r.ue_stats:
                w.writerow([r.cell.policy, r.cell.n_ues, r.cell.seed, s.ue_id, s.direction.value,
                            s.demand_class, fmt(s.throughput_mbps), fmt(s.mean_delay_ms), fmt(s.mean_mcs),
                            fmt(s.tti_allocation_pct), fmt(s.mean_symbols_per_alloc)])


def write_outputs(out_dir: str | Path, results: Sequence[CellResult]) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary, per_ue = out / "summary.csv", out / "per_ue.csv"
    write_summary_csv(summary, results)
    write_per_ue_csv(per_ue, results)
    return summary, per_ue


def summary_table(results: Sequence[CellResult]) -> str:
    lines = [f"{'policy':<6} {'n_ues':>5} {'seed':>4} {'avg UE Mbps':>11} {'cell Mbps':>9} "
             f"{'delay ms':>9} {'jain':>6}  status"]
    for r in results:
        c = r.cell
        if r.summary is None:
            lines.append(f"{c.policy:<6} {c.n_ues:>5} {c.seed:>4} {'-':>11} {'-':>9} {'-':>9} {'-':>6}  "
                         f"FAILED: {r.error}")
            continue
        s = r.summary
        status = "ok" if r.ok else "INVARIANT: " + "; ".join(r.violations)
        lines.append(f"{c.policy:<6} {c.n_ues:>5} {c.seed:>4} {s.avg_ue_throughput_mbps:>11.3f} "
                     f"{s.cell_throughput_mbps:>9.3f} {s.avg_delay_ms:>9.3f} {s.jain:>6.3f}  {status}")
    return "\n".join(lines)


def _mean(xs: Sequence[float]) -> float:
    return sum(xs) / len(xs)


def seed_means(results: Sequence[CellResult], attr: str) -> dict[tuple[str, int], float]:
    """Average a CellSummary field over seeds, keyed by (policy, n_ues)."""
    groups: dict[tuple[str, int], list[float]] = {}
    for r in results:
        if r.summary is not None:
            groups.setdefault((r.cell.policy, r.cell.n_ues), []).append(getattr(r.summary, attr))
    return {k: _mean(v) for k, v in groups.items()}


def throughput_sweep(base: ScenarioConfig | None = None, seeds: int = FIGURE_SEEDS, jobs: int = 1,
                     n_values: Iterable[int] = range(1, 11)) -> list[CellResult]:
    """Saturated (full-buffer) sweep with identical per-UE demand."""
    cfg = (base or ScenarioConfig()).replace(traffic="full_buffer", **CONTROLLED_DEMAND)
    return sweep(cfg, POLICY_NAMES, n_values, range(1, seeds + 1), jobs)


def delay_sweep(base: ScenarioConfig | None = None, seeds: int = FIGURE_SEEDS, jobs: int = 1,
                n_values: Iterable[int] = range(1, 11)) -> list[CellResult]:
    """CBR sweep, every UE offering 60% of the lone-UE capacity in each direction."""
    cfg = (base or ScenarioConfig()).replace(**CONTROLLED_DEMAND)
    rate = DELAY_LOAD_FRACTION * single_ue_capacity_mbps(cfg)
    cfg = cfg.replace(traffic=f"cbr:{rate:.6f}")
    return sweep(cfg, POLICY_NAMES, n_values, range(1, seeds + 1), jobs)


@dataclass
class FigureSet:
    paths: dict[str, Path]
    failures: list[CellResult]
    throughput: list[CellResult]
    delay: list[CellResult]
    per_user: CellResult


def reproduce_figures(out_dir: str | Path, seeds: int = FIGURE_SEEDS, jobs: int = 1,
                      base: ScenarioConfig | None = None) -> FigureSet:
    """Write fig5.csv, fig6.csv and fig7_8.csv into ``out_dir``."""
    base = base or ScenarioConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    tput = throughput_sweep(base, seeds, jobs)
    delay = delay_sweep(base, seeds, jobs)
    per_user = run_cell(base.replace(traffic="full_buffer"), Cell("pf", 7, base.seed))

    paths = {"fig5": out / "fig5.csv", "fig6": out / "fig6.csv", "fig7_8": out / "fig7_8.csv"}
    cell = seed_means(tput, "cell_throughput_mbps")
    ue = seed_means(tput, "avg_ue_throughput_mbps")
    with open(paths["fig5"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FIG5_HEADER)
        for (policy, n), v in ue.items():
            w.writerow([policy, n, seeds, fmt(v), fmt(cell[(policy, n)] / (2 * n)), fmt(cell[(policy, n)])])
    d = seed_means(delay, "avg_delay_ms")
    with open(paths["fig6"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FIG6_HEADER)
        for (policy, n), v in d.items():
            w.writerow([policy, n, seeds, fmt(v)])
    with open(paths["fig7_8"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FIG7_8_HEADER)
        for s in per_user.ue_stats:
            w.writerow([s.ue_id, s.direction.value, s.demand_class, fmt(s.throughput_mbps),
                        fmt(s.mean_delay_ms), fmt(s.mean_mcs), fmt(s.tti_allocation_pct),
                        fmt(s.mean_symbols_per_alloc)])
    failures = [r for r in (*tput, *delay, per_user) if not r.ok]
    return FigureSet(paths, failures, tput, delay, per_user)
