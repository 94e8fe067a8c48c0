"""The four MBSFN configuration constraints, as diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..topology import CellGrid, dilate
from .model import MAX_AREAS_PER_CELL

NEIGHBOR_LIMIT = "neighbor_limit"
GLOBAL_LIMIT = "global_limit"
CONSTRAINT_I_MODES = (NEIGHBOR_LIMIT, GLOBAL_LIMIT)
MAX_MBSFN = 256


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    violations: tuple[int, ...] = field(default=())

    def __bool__(self) -> bool:
        return self.ok


def _cells_of(plan):
    areas = getattr(plan, "areas", plan)
    return [frozenset(a.cells) for a in areas]


def neighbor_sets(cell_sets, grid: CellGrid) -> list[set[int]]:
    """For each area, the other areas that overlap it or touch it."""
    by_cell: dict[int, list[int]] = {}
    for k, cells in enumerate(cell_sets):
        for c in cells:
            by_cell.setdefault(c, []).append(k)
    out = []
    for k, cells in enumerate(cell_sets):
        near = set()
        for c in dilate(grid, cells):
            near.update(by_cell.get(c, ()))
        near.discard(k)
        out.append(near)
    return out


def check_constraint_i(plan, grid: CellGrid, mode: str = NEIGHBOR_LIMIT,
                       max_mbsfn: int = MAX_MBSFN) -> CheckResult:
    """(i): neighbour count per area (neighbor_limit) or area count (global_limit)."""
    cell_sets = _cells_of(plan)
    if mode == GLOBAL_LIMIT:
        if len(cell_sets) <= max_mbsfn:
            return CheckResult(True)
        return CheckResult(False, tuple(range(len(cell_sets))))
    if mode != NEIGHBOR_LIMIT:
        raise ValueError(f"unknown constraint (i) mode {mode!r}")
    bad = tuple(k for k, near in enumerate(neighbor_sets(cell_sets, grid)) if len(near) > max_mbsfn)
    return CheckResult(not bad, bad)


def membership_counts(plan, n_cells: int) -> np.ndarray:
    counts = np.zeros(n_cells, dtype=np.int64)
    for cells in _cells_of(plan):
        counts[list(cells)] += 1
    return counts


def check_constraint_ii(plan, grid: CellGrid, limit: int = MAX_AREAS_PER_CELL) -> CheckResult:
    counts = membership_counts(plan, len(grid))
    bad = tuple(int(c) for c in np.flatnonzero(counts > limit))
    return CheckResult(not bad, bad)


def broadcast_rbs_per_cell(plan, n_cells: int) -> np.ndarray:
    load = np.zeros(n_cells, dtype=np.int64)
    for a in plan.areas:
        total = sum(a.budgets[i] for i in a.items)
        load[list(a.cells)] += total
    return load


def check_constraint_iii(plan, n_cells: int, rbs_per_frame: int = 500,
                         fraction: float = 0.6) -> CheckResult:
    """(iii): broadcast RBs per cell and frame at most 60% of R (inclusive)."""
    load = broadcast_rbs_per_cell(plan, n_cells)
    cap = int(round(fraction * rbs_per_frame))
    bad = tuple(int(c) for c in np.flatnonzero(load > cap))
    return CheckResult(not bad, bad)


def check_constraint_iv(layout, rbs_per_frame: int = 500,
                        subframes_per_frame: int = 10) -> CheckResult:
    """(iv): per cell and subframe, all RB classes together fit in R/10."""
    per_sf = rbs_per_frame // subframes_per_frame
    totals = layout.totals()
    bad = tuple(int(c) for c in np.flatnonzero((totals > per_sf).any(axis=1)))
    return CheckResult(not bad, bad)


def check_all(plan, grid: CellGrid, mode: str, max_mbsfn: int, radio) -> dict[str, CheckResult]:
    out = {
        "i": check_constraint_i(plan, grid, mode, max_mbsfn),
        "ii": check_constraint_ii(plan, grid),
        "iii": check_constraint_iii(plan, len(grid), radio.rbs_per_frame),
    }
    if plan.layout is not None:
        out["iv"] = check_constraint_iv(plan.layout, radio.rbs_per_frame, radio.subframes_per_frame)
    return out
