"""Greedy activation of candidate areas."""

from __future__ import annotations

from ..areas.engine import Evaluator, PlanState, evaluate_reference
from ..areas.model import AreaSpec
from .base import PlannerConfig


def _specs(candidates) -> list[AreaSpec]:
    out, seen = [], set()
    for a in candidates:
        s = a.spec if hasattr(a, "spec") else a
        if s not in seen:
            seen.add(s)
            out.append(s)
    return sorted(out, key=lambda s: (s.key, tuple(sorted(s.cells)), s.items))


def service_cap(ev: Evaluator, config: PlannerConfig) -> float:
    return config.target_serve_fraction * ev.total_demand()


def hill_climbing(candidates, ev: Evaluator, config: PlannerConfig = PlannerConfig(),
                  initial=()) -> tuple[int, list[AreaSpec]]:
    """Add, one per round, the candidate that improves the plan the most.

    A plan is ranked by (served broadcast demand capped at the target
    fraction, throughput): while the target is not met, activation favours
    areas that serve more demand; once it is met, only throughput counts.
    Only strict improvements are taken; ties go to the lower (item, cell) key.
    Returns the throughput numerator of the final plan and its areas (the
    initial areas first, then activated ones in activation order).
    """
    # initial areas that no longer fit (e.g. after a repack) are dropped
    probe = PlanState(ev)
    initial = [s for s in initial if probe.add(s)]
    pool = [s for s in _specs(candidates) if s not in set(initial)]
    cap = service_cap(ev, config)
    if config.fast_hill_climbing:
        return _fast(pool, ev, initial, cap)
    return _reference(pool, ev, initial, cap)


def _reference(pool, ev, plan, cap):
    ok, T, S = evaluate_reference(ev, plan, served=True)
    if not ok:
        raise ValueError("initial plan is infeasible")
    cur = (min(S, cap), T)
    while pool:
        best = None
        for a in pool:
            ok, t, s = evaluate_reference(ev, plan + [a], served=True)
            key = (min(s, cap), t)
            if ok and key > cur and (best is None or key > best[0]):
                best = (key, a)
        if best is None:
            break
        cur = best[0]
        plan.append(best[1])
        pool.remove(best[1])
    return cur[1], plan


def _fast(pool, ev, plan, cap):
    state = PlanState(ev, plan)
    cache: dict[AreaSpec, tuple[bool, int, int]] = {}
    while pool:
        cur = (min(state.served, cap), state.total)
        best = None
        for a in pool:
            hit = cache.get(a)
            if hit is None:
                ok, delta, data = state.probe(a)
                hit = cache[a] = (ok, delta, state.served_delta(data) if ok else 0)
            ok, dt, ds = hit
            if not ok:
                continue
            key = (min(state.served + ds, cap), state.total + dt)
            if key > cur and (best is None or key > best[0]):
                best = (key, a)
        if best is None:
            break
        chosen = best[1]
        state.add(chosen)
        pool.remove(chosen)
        touched = chosen.cells
        for a in list(cache):
            if not a.cells.isdisjoint(touched):
                del cache[a]
    return state.total, list(state.specs)
