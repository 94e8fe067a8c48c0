"""Shared planner configuration, candidate areas and plan helpers."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..areas.constraints import CONSTRAINT_I_MODES, NEIGHBOR_LIMIT
from ..areas.engine import Evaluator, PlanState
from ..areas.model import AreaSpec


@dataclass(frozen=True)
class PlannerConfig:
    tau: int = 2
    max_mbsfn: int = 256
    constraint_i_mode: str = NEIGHBOR_LIMIT
    target_serve_fraction: float = 1.0
    # cached candidate deltas in hill climbing; bit-identical to the reference path
    fast_hill_climbing: bool = True
    # MCF step 1: exhaustive item-subset search per cell instead of greedy by density
    mcf_exhaustive: bool = False

    def __post_init__(self):
        if self.tau < 1:
            raise ValueError("tau must be >= 1")
        if self.max_mbsfn < 1:
            raise ValueError("max_mbsfn must be >= 1")
        if self.constraint_i_mode not in CONSTRAINT_I_MODES:
            raise ValueError(f"constraint_i_mode must be one of {CONSTRAINT_I_MODES}")
        if not 0.0 <= self.target_serve_fraction <= 1.0:
            raise ValueError("target_serve_fraction must be in [0, 1]")


@dataclass(frozen=True)
class TraceRecord:
    stage: str
    n_candidates: int
    n_areas: int
    T: float


@dataclass(frozen=True)
class CandidateArea:
    """Single-content area produced by cell aggregation."""

    item: int
    cells: frozenset[int]
    counts: dict[int, int] = field(default_factory=dict, compare=False, hash=False)

    @property
    def spec(self) -> AreaSpec:
        return AreaSpec(self.cells, (self.item,))


def plan_summary(ev: Evaluator, specs):
    return PlanState(ev, specs).summary()


def served_fraction(summary) -> float:
    n = summary.n_bcast + summary.n_fallback + summary.n_unserved
    return (summary.n_bcast + summary.n_fallback) / n if n else 1.0


def standalone_value(ev: Evaluator, spec: AreaSpec) -> int:
    """Broadcast throughput the area delivers on its own: sum of B * rho * w."""
    total = 0
    for i, b, rho in ev.resolve(spec) or ():
        total += b * rho * ev.live(i) * sum(ev.weight(c, i) for c in spec.cells)
    return total


def per_frame(ev: Evaluator, numerator: int) -> float:
    return numerator / ev.period
