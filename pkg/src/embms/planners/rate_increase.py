"""Rate Increase: drop the slowest broadcast users when that raises throughput."""

from __future__ import annotations

import numpy as np

from ..areas.engine import Evaluator, evaluate_reference
from ..areas.model import AreaSpec
from .aggregation import cell_aggregation
from .base import PlannerConfig, TraceRecord, plan_summary, served_fraction
from .hill_climbing import hill_climbing


def broadcast_tiers(ev: Evaluator, specs) -> dict[int, dict[AreaSpec, np.ndarray]]:
    """Per bits/RB tier, the broadcast-served users of each area at that tier."""
    tiers: dict[int, dict[AreaSpec, list]] = {}
    for s in specs:
        for i in s.items:
            ids, bits = ev.eligible_users(s.cells, i)
            for j, b in zip(ids.tolist(), bits.tolist()):
                tiers.setdefault(int(b), {}).setdefault(s, []).append(j)
    return {b: {s: np.array(v, dtype=np.int64) for s, v in per.items()}
            for b, per in sorted(tiers.items())}


def _accept(T_new, T, ev_new, specs_new, frac_cur, config) -> tuple[bool, float]:
    if T_new <= T:
        return False, frac_cur
    frac = served_fraction(plan_summary(ev_new, specs_new))
    if frac >= min(config.target_serve_fraction, frac_cur):
        return True, frac
    return False, frac_cur


def rate_increase(specs, T: int, ev: Evaluator, config: PlannerConfig = PlannerConfig(),
                  candidates=(), trace=None) -> tuple[int, list[AreaSpec], Evaluator]:
    """Try removing each bits/RB tier of broadcast users, slowest first.

    For each tier the affected areas are re-aggregated without those users
    and hill climbing restarts from the unaffected areas, with the new
    fragments and the candidates never activated as the pool. The change is
    kept only if throughput rises and the served fraction does not drop
    below the target. Returns (T, areas, evaluator with the final removals).
    """
    specs = list(specs)
    frac = served_fraction(plan_summary(ev, specs))
    for s_bits in broadcast_tiers(ev, specs):
        per_area = broadcast_tiers(ev, specs).get(s_bits)
        if not per_area:
            continue
        users = np.concatenate(list(per_area.values()))
        ev_new = ev.derive(ev.removed | set(users.tolist()))
        affected = set(per_area)
        keep = [s for s in specs if s not in affected]
        interest = ev_new.interest_map()
        frags = []
        for s in sorted(affected, key=lambda a: a.key):
            frags += [a.spec for a in cell_aggregation(ev.sc.grid, interest, s.items, config.tau, s.cells)]
        pool = frags + [c.spec if hasattr(c, "spec") else c for c in candidates]
        T_new, specs_new = hill_climbing(pool, ev_new, config, initial=keep)
        ok, frac = _accept(T_new, T, ev_new, specs_new, frac, config)
        if trace is not None:
            trace.append(TraceRecord(f"rate_increase[{s_bits}]", len(pool), len(specs_new),
                                     T_new / ev.period))
        if ok:
            T, specs, ev = T_new, specs_new, ev_new
    return T, specs, ev


def rate_increase_fixed(specs, T: int, ev: Evaluator, config: PlannerConfig = PlannerConfig(),
                        trace=None) -> tuple[int, list[AreaSpec], Evaluator]:
    """Rate Increase for multi-content areas whose cell sets stay fixed.

    Removing a tier only recomputes B and rho; items left without eligible
    users are dropped from their area.
    """
    specs = list(specs)
    frac = served_fraction(plan_summary(ev, specs))
    for s_bits in broadcast_tiers(ev, specs):
        per_area = broadcast_tiers(ev, specs).get(s_bits)
        if not per_area:
            continue
        users = np.concatenate(list(per_area.values()))
        ev_new = ev.derive(ev.removed | set(users.tolist()))
        specs_new = []
        for s in specs:
            items = tuple(i for i in s.items if ev_new.area_item(s.cells, i) is not None)
            if items:
                specs_new.append(AreaSpec(s.cells, items))
        ok, T_new = evaluate_reference(ev_new, specs_new)
        if ok:
            ok, frac = _accept(T_new, T, ev_new, specs_new, frac, config)
        if trace is not None:
            trace.append(TraceRecord(f"rate_increase[{s_bits}]", 0, len(specs_new),
                                     T_new / ev.period))
        if ok:
            T, specs, ev = T_new, specs_new, ev_new
    return T, specs, ev
