"""Frame, slot and symbol arithmetic for NR numerologies, plus the flexible
slot format used for dynamic TDD.

One TTI is one slot throughout the simulator.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

SYMBOLS_PER_SLOT = 14
FLEXIBLE_SYMBOLS = SYMBOLS_PER_SLOT - 2
SUBFRAME_MS = 1.0
FRAME_MS = 10.0
MAX_MU = 4


class SymbolRole(str, Enum):
    DL_CONTROL = "DlControl"
    DL_DATA = "DlData"
    UL_DATA = "UlData"
    UL_CONTROL = "UlControl"


def _check_mu(mu: int) -> None:
    if not isinstance(mu, int) or isinstance(mu, bool) or not 0 <= mu <= MAX_MU:
        raise ValueError(f"numerology mu must be an integer in [0, {MAX_MU}], got {mu!r}")


@dataclass(frozen=True)
class NumerologyConfig:
    mu: int = 2

    def __post_init__(self):
        _check_mu(self.mu)

    @property
    def subcarrier_spacing_khz(self) -> float:
        return 15.0 * 2**self.mu

    @property
    def symbols_per_slot(self) -> int:
        return SYMBOLS_PER_SLOT

    @property
    def slots_per_subframe(self) -> int:
        return slots_per_subframe(self.mu)

    @property
    def slot_duration_ms(self) -> float:
        return slot_duration(self.mu)


def slots_per_subframe(mu: int) -> int:
    _check_mu(mu)
    return 2**mu


def slot_duration(mu: int) -> float:
    """TTI length in milliseconds (exact for every valid mu: powers of two)."""
    return SUBFRAME_MS / slots_per_subframe(mu)


def tti_to_time(tti: int, mu: int) -> float:
    if tti < 0:
        raise ValueError(f"tti must be non-negative, got {tti}")
    return tti * slot_duration(mu)


@dataclass(frozen=True)
class SlotFormat:
    roles: tuple[SymbolRole, ...]

    def __post_init__(self):
        roles = self.roles
        if len(roles) != SYMBOLS_PER_SLOT:
            raise ValueError(f"slot format needs {SYMBOLS_PER_SLOT} roles, got {len(roles)}")
        if roles[0] is not SymbolRole.DL_CONTROL or roles[-1] is not SymbolRole.UL_CONTROL:
            raise ValueError("first symbol must be DL control and last symbol UL control")
        middle = roles[1:-1]
        if any(r in (SymbolRole.DL_CONTROL, SymbolRole.UL_CONTROL) for r in middle):
            raise ValueError("control roles are only allowed at the slot edges")
        seen_ul = False
        for r in middle:
            if r is SymbolRole.UL_DATA:
                seen_ul = True
            elif seen_ul:
                raise ValueError("all DL data symbols must precede all UL data symbols")

    @cached_property
    def n_dl(self) -> int:
        return sum(r is SymbolRole.DL_DATA for r in self.roles)

    @cached_property
    def n_ul(self) -> int:
        return sum(r is SymbolRole.UL_DATA for r in self.roles)

    def dl_symbols(self) -> range:
        return range(1, 1 + self.n_dl)

    def ul_symbols(self) -> range:
        start = 1 + self.n_dl
        return range(start, start + self.n_ul)


_FORMAT_CACHE: dict[tuple[int, int], SlotFormat] = {}


def build_slot_format(n_dl_data: int, n_ul_data: int) -> SlotFormat:
    if n_dl_data < 0 or n_ul_data < 0 or n_dl_data + n_ul_data != FLEXIBLE_SYMBOLS:
        raise ValueError(
            f"DL/UL data symbol counts must be non-negative and sum to {FLEXIBLE_SYMBOLS}, "
            f"got ({n_dl_data}, {n_ul_data})"
        )
    key = (n_dl_data, n_ul_data)
    fmt = _FORMAT_CACHE.get(key)
    if fmt is None:
        roles = (
            (SymbolRole.DL_CONTROL,)
            + (SymbolRole.DL_DATA,) * n_dl_data
            + (SymbolRole.UL_DATA,) * n_ul_data
            + (SymbolRole.UL_CONTROL,)
        )
        fmt = _FORMAT_CACHE[key] = SlotFormat(roles)
    return fmt


def split_flexible_symbols(dl_demand: int, ul_demand: int) -> tuple[int, int]:
    """Share the 12 flexible symbols between DL and UL in proportion to demand.

    Half-way cases use round-half-to-even, which keeps the split symmetric
    under swapping the arguments because 12 is even. A direction with any
    demand gets at least one symbol.
    """
    if dl_demand < 0 or ul_demand < 0:
        raise ValueError("demands must be non-negative")
    total = dl_demand + ul_demand
    if total == 0:
        return FLEXIBLE_SYMBOLS // 2, FLEXIBLE_SYMBOLS // 2
    n_dl, rem = divmod(FLEXIBLE_SYMBOLS * dl_demand, total)
    if 2 * rem > total or (2 * rem == total and n_dl % 2):
        n_dl += 1
    if dl_demand > 0:
        n_dl = max(n_dl, 1)
    if ul_demand > 0:
        n_dl = min(n_dl, FLEXIBLE_SYMBOLS - 1)
    return n_dl, FLEXIBLE_SYMBOLS - n_dl
