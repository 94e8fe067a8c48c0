"""Area Fusion: merge overlapping areas until constraint (i) holds."""

from __future__ import annotations

from collections import defaultdict

from ..areas.constraints import GLOBAL_LIMIT, check_constraint_i
from ..areas.engine import Evaluator, evaluate_reference
from ..areas.model import MAX_AREAS_PER_CELL, AreaSpec
from ..topology import CellGrid, dilate, is_connected
from .base import PlannerConfig, TraceRecord, standalone_value


def merge_identical(specs) -> list[AreaSpec]:
    """Areas over the same cells become one area broadcasting all their items."""
    groups: dict[frozenset, list[int]] = {}
    for s in specs:
        groups.setdefault(s.cells, []).extend(s.items)
    return [AreaSpec(cells, tuple(items)) for cells, items in groups.items()]


def _rank(ev: Evaluator, specs) -> list[int]:
    value = [standalone_value(ev, s) for s in specs]
    return sorted(range(len(specs)), key=lambda k: (-value[k], specs[k].key, k))


def repair(ev: Evaluator, specs) -> list[AreaSpec]:
    """Drop the least valuable areas until the plan satisfies (ii)-(iv)."""
    specs = list(specs)
    while specs and not evaluate_reference(ev, specs)[0]:
        del specs[_rank(ev, specs)[-1]]
    return specs


def truncate(ev: Evaluator, specs, grid: CellGrid, config: PlannerConfig) -> list[AreaSpec]:
    """Keep the most valuable areas while constraint (i) holds, then repair."""
    order = _rank(ev, specs)
    limit = config.max_mbsfn
    kept: list[int] = []
    if config.constraint_i_mode == GLOBAL_LIMIT:
        kept = order[:limit]
    else:
        by_cell: dict[int, list[int]] = defaultdict(list)
        count: dict[int, int] = {}
        for k in order:
            near = {m for c in dilate(grid, specs[k].cells) for m in by_cell.get(c, ())}
            if len(near) > limit or any(count[m] + 1 > limit for m in near):
                continue
            for m in near:
                count[m] += 1
            count[k] = len(near)
            for c in specs[k].cells:
                by_cell[c].append(k)
            kept.append(k)
    return repair(ev, [specs[k] for k in sorted(kept)])


class _Cover:
    """Per-cell (item, B, rho) cover and membership of a plan, for merge screening."""

    def __init__(self, ev: Evaluator, specs):
        n = ev.sc.n_cells
        self.ev = ev
        self.cover: list[dict[int, tuple]] = [dict() for _ in range(n)]
        self.members = [0] * n
        for s in specs:
            for i, b, r in ev.resolve(s):
                for c in s.cells:
                    self.cover[c][i] = (i, b, r)
            for c in s.cells:
                self.members[c] += 1

    def key(self, c, drop=(), add=()):
        cur = [t for i, t in self.cover[c].items() if i not in drop]
        return tuple(sorted(cur + list(add)))

    def merge_delta(self, a: AreaSpec, b: AreaSpec, merged: AreaSpec):
        params = self.ev.resolve(merged)
        if params is None:
            return None
        delta = 0
        for c in sorted(merged.cells):
            drop = set()
            n = self.members[c] + 1
            if c in a.cells:
                drop.update(a.items)
                n -= 1
            if c in b.cells:
                drop.update(b.items)
                n -= 1
            if n > MAX_AREAS_PER_CELL:
                return None
            if any(i in self.cover[c] and i not in drop for i, _, _ in params):
                return None
            new = self.ev.cell(c, self.key(c, drop, params))
            if not new.feasible:
                return None
            delta += new.total - self.ev.cell(c, self.key(c)).total
        return delta


def area_fusion(specs, ev: Evaluator, grid: CellGrid, config: PlannerConfig = PlannerConfig(),
                trace=None) -> tuple[int, list[AreaSpec]]:
    specs = repair(ev, merge_identical(specs))
    if trace is not None:
        trace.append(TraceRecord("fusion[identical]", 0, len(specs),
                                 evaluate_reference(ev, specs)[1] / ev.period))
    mode, limit = config.constraint_i_mode, config.max_mbsfn
    while not check_constraint_i(specs, grid, mode, limit):
        trunc = truncate(ev, specs, grid, config)
        _, T_trunc = evaluate_reference(ev, trunc)
        ok, T_cur = evaluate_reference(ev, specs)
        cover = _Cover(ev, specs)
        groups: dict[int, list] = defaultdict(list)
        for x in range(len(specs)):
            for y in range(x + 1, len(specs)):
                a, b = specs[x], specs[y]
                if a.cells != b.cells and not a.cells.isdisjoint(b.cells):
                    groups[len(a.cells ^ b.cells)].append((x, y))
        chosen = None
        for d in sorted(groups):
            options = []
            for x, y in groups[d]:
                a, b = specs[x], specs[y]
                merged = AreaSpec(a.cells | b.cells, a.items + b.items)
                delta = cover.merge_delta(a, b, merged)
                if delta is not None and T_cur + delta >= T_trunc:
                    options.append((-(T_cur + delta), merged.key, x, y, merged))
            for _, _, x, y, merged in sorted(options, key=lambda o: o[:4]):
                assert is_connected(grid, merged.cells)
                new = [s for k, s in enumerate(specs) if k not in (x, y)]
                new.insert(x, merged)
                new = merge_identical(new)
                if evaluate_reference(ev, new)[0]:
                    chosen = new
                    break
            if chosen is not None:
                break
        if chosen is None:
            specs = trunc
            if trace is not None:
                trace.append(TraceRecord("fusion[truncate]", 0, len(specs), T_trunc / ev.period))
            break
        specs = chosen
    ok, T = evaluate_reference(ev, specs)
    assert ok
    if trace is not None:
        trace.append(TraceRecord("area_fusion", 0, len(specs), T / ev.period))
    return T, specs
