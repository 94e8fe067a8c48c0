from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

MAX_AREAS_PER_CELL = 8


@dataclass(frozen=True)
class AreaSpec:
    """What a planner decides: a contiguous cell set and the items it broadcasts."""

    cells: frozenset[int]
    items: tuple[int, ...]

    def __post_init__(self):
        if not self.cells:
            raise ValueError("an area needs at least one cell")
        object.__setattr__(self, "items", tuple(sorted(set(self.items))))

    @property
    def key(self) -> tuple:
        return (self.items[0] if self.items else -1, min(self.cells))

    @property
    def size(self) -> int:
        return len(self.cells)


@dataclass(frozen=True)
class MbsfnArea:
    id: int
    cells: frozenset[int]
    items: tuple[int, ...]
    budgets: dict[int, int]  # B_m^i, RBs per frame
    rates: dict[int, int]  # rho_m^i, bits per RB
    served: dict[tuple[int, int], int] = field(repr=False)  # w_c^i

    @property
    def spec(self) -> AreaSpec:
        return AreaSpec(self.cells, self.items)


@dataclass(frozen=True)
class SubframeLayout:
    """Per-cell, per-subframe RB usage by class: broadcast, fallback, unicast."""

    broadcast: np.ndarray  # (cells, subframes)
    fallback: np.ndarray
    unicast: np.ndarray

    def totals(self) -> np.ndarray:
        return self.broadcast + self.fallback + self.unicast


@dataclass(frozen=True)
class AreaPlan:
    areas: tuple[MbsfnArea, ...] = ()
    # users excluded from broadcast service by Rate Increase
    removed: frozenset[int] = frozenset()
    # filled by allocate_subframes
    fallback: dict[int, int] | None = None  # X_j: user -> RBs/frame
    unicast: dict[int, int] | None = None  # U_j: user -> RBs/frame
    broadcast_served: frozenset[int] = frozenset()
    unserved: frozenset[int] = frozenset()
    layout: SubframeLayout | None = None

    @property
    def finalized(self) -> bool:
        return self.layout is not None

    @property
    def specs(self) -> list[AreaSpec]:
        return [a.spec for a in self.areas]

    def mean_area_size(self) -> float:
        return float(np.mean([len(a.cells) for a in self.areas])) if self.areas else 0.0

    def to_text(self) -> str:
        buf = io.StringIO()
        buf.write("area,cells,items,budgets,rates\n")
        for a in self.areas:
            cells = " ".join(map(str, sorted(a.cells)))
            items = " ".join(map(str, a.items))
            budgets = " ".join(str(a.budgets[i]) for i in a.items)
            rates = " ".join(str(a.rates[i]) for i in a.items)
            buf.write(f"{a.id},{cells},{items},{budgets},{rates}\n")
        return buf.getvalue()


RB_GAIN_UNDEFINED = math.nan


@dataclass(frozen=True)
class ThroughputReport:
    T_bb: float
    T_bu: float
    T_u: float
    serving_ratio: float
    rb_gain: float
    rb_frac_bb: float
    rb_frac_bu: float
    rb_frac_uu: float
    unserved_fraction: float
    serving_ratio_users: float = 0.0
    n_areas: int = 0
    mean_area_size: float = 0.0
    n_broadcast_users: int = 0
    n_unserved: int = 0

    @property
    def T_total(self) -> float:
        return self.T_bb + self.T_bu + self.T_u

    @property
    def rb_fractions(self) -> dict[str, float]:
        return {"B(B)": self.rb_frac_bb, "B(U)": self.rb_frac_bu, "U(U)": self.rb_frac_uu}

    def as_row(self) -> dict[str, float]:
        return {
            "T_bb": self.T_bb, "T_bu": self.T_bu, "T_u": self.T_u, "T_total": self.T_total,
            "serving_ratio": self.serving_ratio, "serving_ratio_users": self.serving_ratio_users,
            "rb_gain": self.rb_gain, "rb_frac_bb": self.rb_frac_bb,
            "rb_frac_bu": self.rb_frac_bu, "rb_frac_uu": self.rb_frac_uu,
            "unserved_fraction": self.unserved_fraction, "n_areas": self.n_areas,
            "mean_area_size": self.mean_area_size,
        }
