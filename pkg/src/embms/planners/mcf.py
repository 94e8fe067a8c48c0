"""Multiple-Content Fusion baseline: grow multi-item areas from single cells."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from ..areas.engine import Evaluator, evaluate_reference
from ..areas.model import AreaSpec
from ..topology import dilate
from .base import PlannerConfig, TraceRecord
from .fusion import truncate
from .rate_increase import rate_increase_fixed


def best_cell_items(ev: Evaluator, c: int, tau: int, exhaustive: bool = False) -> tuple[int, ...]:
    """Items broadcast by the single-cell area at ``c``.

    Only items with at least ``tau`` interested users qualify. Greedy adds
    them by decreasing rho * w (throughput per broadcast RB) while the cell's
    throughput grows; the exhaustive variant tries every subset.
    """
    cells = frozenset([c])
    options = []
    for i in ev.sc.items_by_cell.get(c, ()):
        if ev.interest(c, i) < tau:
            continue
        p = ev.area_item(cells, i)
        if p is not None:
            options.append((i, p[0], p[1]))

    def value(sel):
        if sum(b for _, b, _ in sel) > ev.cap_bcast:
            return None
        o = ev.cell(c, tuple(sorted(sel)))
        return o.total if o.feasible else None

    if exhaustive:
        best, best_v = (), value(())
        for k in range(1, len(options) + 1):
            for sel in combinations(options, k):
                v = value(sel)
                if v is not None and v > best_v:
                    best, best_v = sel, v
        return tuple(sorted(i for i, _, _ in best))
    options.sort(key=lambda t: (-t[2] * ev.interest(c, t[0]) * ev.live(t[0]), t[0]))
    sel, cur = [], value(())
    for t in options:
        v = value(sel + [t])
        if v is not None and v > cur:
            sel.append(t)
            cur = v
    return tuple(sorted(i for i, _, _ in sel))


@dataclass(frozen=True)
class _Merge:
    plan: list
    T: int


def interest_vector(ev: Evaluator, cells, items) -> np.ndarray:
    v = np.array([sum(ev.interest(c, i) for c in cells) for i in items], dtype=float)
    n = np.linalg.norm(v)
    return v / n if n else v


def _try_merge(ev, plan, T, m, n):
    """Grow a common item subset over m | n greedily; None if nothing improves T."""
    common = sorted(set(m.items) & set(n.items))
    if not common:
        return None
    rest = [s for s in plan if s not in (m, n)]
    cells = m.cells | n.cells
    chosen: list[int] = []
    best = None
    while True:
        step = None
        for i in common:
            if i in chosen:
                continue
            sub = tuple(sorted(chosen + [i]))
            new = list(rest) + [AreaSpec(cells, sub)]
            for s in (m, n):
                left = tuple(x for x in s.items if x not in sub)
                if left:
                    new.append(AreaSpec(s.cells, left))
            ok, t = evaluate_reference(ev, new)
            if ok and (step is None or t > step.T):
                step = _Merge(new, t)
                pick = i
        if step is None or (best is not None and step.T <= best.T):
            break
        best = step
        chosen.append(pick)
    if best is None or best.T <= T:
        return None
    return best


def mcf_premerge(scenario, config: PlannerConfig = PlannerConfig(), ev: Evaluator | None = None,
                 trace=None) -> tuple[int, list[AreaSpec], Evaluator]:
    """Steps (1)-(2) and Rate Increase; independent of Max_MBSFN."""
    ev = ev if ev is not None else Evaluator(scenario)
    grid = scenario.grid
    plan = []
    for c in range(scenario.n_cells):
        items = best_cell_items(ev, c, config.tau, config.mcf_exhaustive)
        if items:
            plan.append(AreaSpec(frozenset([c]), items))
    ok, T = evaluate_reference(ev, plan)
    assert ok
    if trace is not None:
        trace.append(TraceRecord("mcf_cells", 0, len(plan), T / ev.period))
    all_items = sorted({i for s in plan for i in s.items})
    pool = list(plan)
    while pool:
        m = pool.pop(0)
        if m not in plan:
            continue
        ring = dilate(grid, m.cells)
        near = [s for s in plan if s != m and not ring.isdisjoint(s.cells)]
        if not near:
            continue
        vm = interest_vector(ev, m.cells, all_items)
        dist = [(float(np.linalg.norm(vm - interest_vector(ev, s.cells, all_items))), s.key, k)
                for k, s in enumerate(near)]
        n = near[min(dist)[2]]
        merged = _try_merge(ev, plan, T, m, n)
        if merged is None:
            continue
        fresh = [s for s in merged.plan if s not in plan]
        plan, T = merged.plan, merged.T
        pool = [s for s in pool if s in plan] + fresh
    if trace is not None:
        trace.append(TraceRecord("mcf_merge", 0, len(plan), T / ev.period))
    T, plan, ev = rate_increase_fixed(plan, T, ev, config, trace)
    return T, plan, ev


def mcf_specs(scenario, config: PlannerConfig = PlannerConfig(), premerge=None,
              ev: Evaluator | None = None, trace=None) -> tuple[int, list[AreaSpec], Evaluator]:
    if premerge is None:
        premerge = mcf_premerge(scenario, config, ev, trace)
    T, plan, ev = premerge
    plan = truncate(ev, plan, scenario.grid, config)
    ok, T = evaluate_reference(ev, plan)
    if trace is not None:
        trace.append(TraceRecord("mcf_truncate", 0, len(plan), T / ev.period))
    return T, plan, ev
