"""Plan finalization, subframe allocation and the throughput metrics."""

from __future__ import annotations

import math

import numpy as np

from ..scenario import Scenario
from .engine import Evaluator, pack_budget
from .model import (RB_GAIN_UNDEFINED, AreaPlan, AreaSpec, MbsfnArea, SubframeLayout,
                    ThroughputReport)


class AllocationError(RuntimeError):
    pass


def build_area(area_id: int, spec: AreaSpec, ev: Evaluator) -> MbsfnArea:
    budgets, rates, served = {}, {}, {}
    for i in spec.items:
        p = ev.area_item(spec.cells, i)
        if p is None:
            raise AllocationError(f"item {i} cannot be broadcast over area {area_id}")
        budgets[i], rates[i] = p
        for c in sorted(spec.cells):
            n = ev.eligible_count(c, i)
            if n:
                served[(c, i)] = n
    return MbsfnArea(area_id, spec.cells, spec.items, budgets, rates, served)


def finalize_plan(specs, scenario: Scenario, removed=frozenset(), view: Evaluator | None = None) -> AreaPlan:
    """Turn planner output into a fully allocated AreaPlan."""
    ev = view if view is not None else Evaluator(scenario, removed)
    areas = tuple(build_area(k, s, ev) for k, s in enumerate(specs))
    return allocate_subframes(AreaPlan(areas, ev.removed), scenario, view=ev)


def _fill(residual: np.ndarray, amount: int) -> np.ndarray:
    out = np.zeros_like(residual)
    for k in range(len(residual)):
        take = min(amount, int(residual[k]))
        out[k] = take
        amount -= take
        if not amount:
            break
    if amount:
        raise AllocationError("demand exceeds residual capacity")
    return out


def allocate_subframes(plan: AreaPlan, scenario: Scenario, view: Evaluator | None = None) -> AreaPlan:
    """Place broadcast, fallback and unicast RBs into the subframes of every cell.

    Broadcast budgets go into the MBSFN-capable subframes, area by area and
    item by item. Broadcast-interested users not covered by an area are then
    admitted over unicast by decreasing CQI at their full rate (or left
    unserved), and the rest of each cell's frame is shared evenly by the native
    unicast users.
    """
    radio = scenario.radio
    ev = view if view is not None else Evaluator(scenario, plan.removed)
    n = scenario.n_cells
    n_sf, n_mbsfn, cap = radio.subframes_per_frame, radio.mbsfn_capable_subframes, radio.rbs_per_subframe

    bcast = np.zeros((n, n_sf), dtype=np.int64)
    items_in = [set() for _ in range(n)]
    for a in plan.areas:
        cells = sorted(a.cells)
        for i in a.items:
            bcast[cells, :n_mbsfn] += pack_budget(bcast[cells, :n_mbsfn], a.budgets[i])
            for c in cells:
                items_in[c].add(i)
    if (bcast > cap).any():
        raise AllocationError("broadcast budgets alone exceed R/10 in some subframe")

    fb_layout = np.zeros_like(bcast)
    uc_layout = np.zeros_like(bcast)
    fallback, unicast = {}, {}
    unserved, served = [], []
    for c in range(n):
        bc = int(bcast[c].sum())
        admitted, left, alloc, bs = ev.allocate_cell(c, items_in[c], bc)
        residual = cap - bcast[c]
        fb = _fill(residual, sum(x for _, x in admitted))
        fb_layout[c] = fb
        uc_layout[c] = _fill(residual - fb, sum(u for _, u in alloc))
        fallback.update(admitted)
        unicast.update(alloc)
        unserved.extend(left)
        served.extend(bs)
    layout = SubframeLayout(bcast, fb_layout, uc_layout)
    return AreaPlan(plan.areas, plan.removed, fallback, unicast, frozenset(served),
                    frozenset(unserved), layout)


def _demand_bits(scenario: Scenario, users) -> float:
    ms = scenario.radio.frame_ms
    return sum(scenario.rate(int(scenario.users.item[j])) * ms for j in users) / 1000.0


def broadcast_throughput(plan: AreaPlan) -> int:
    """Static throughput: sum over areas, items and cells of B * w * rho."""
    total = 0
    for a in plan.areas:
        for (c, i), w in a.served.items():
            total += a.budgets[i] * a.rates[i] * w
    return total


def _report(plan: AreaPlan, scenario: Scenario, t_bb: float, t_bu: float, t_u: float,
            baseline: AreaPlan | None) -> ThroughputReport:
    if not plan.finalized:
        raise ValueError("plan must be finalized by allocate_subframes")
    radio = scenario.radio
    n = scenario.n_cells
    served_users = set(plan.broadcast_served) | set(plan.fallback)
    n_demand = len(served_users) + len(plan.unserved)
    if baseline is None:
        baseline = unicast_only_plan(scenario)
    base_users = set(baseline.fallback)
    served_bits = _demand_bits(scenario, served_users)
    base_bits = _demand_bits(scenario, base_users)
    if n_demand == 0:
        ratio = ratio_users = 0.0
    else:
        ratio = served_bits / base_bits if base_bits else math.inf
        ratio_users = len(served_users) / len(base_users) if base_users else math.inf

    lay = plan.layout
    plan_rbs = int(lay.broadcast.sum() + lay.fallback.sum())
    base_rbs = int(baseline.layout.fallback.sum())
    rb_gain = base_rbs / plan_rbs if plan_rbs else RB_GAIN_UNDEFINED
    denom = n * radio.rbs_per_frame
    return ThroughputReport(
        T_bb=float(t_bb), T_bu=float(t_bu), T_u=float(t_u),
        serving_ratio=ratio, rb_gain=rb_gain,
        rb_frac_bb=float(lay.broadcast.sum()) / denom if n else 0.0,
        rb_frac_bu=float(lay.fallback.sum()) / denom if n else 0.0,
        rb_frac_uu=float(lay.unicast.sum()) / denom if n else 0.0,
        unserved_fraction=len(plan.unserved) / n_demand if n_demand else 0.0,
        serving_ratio_users=ratio_users,
        n_areas=len(plan.areas), mean_area_size=plan.mean_area_size(),
        n_broadcast_users=n_demand, n_unserved=len(plan.unserved),
    )


def unicast_only_plan(scenario: Scenario, view: Evaluator | None = None) -> AreaPlan:
    """Baseline: every broadcast-interested user goes through fallback admission."""
    return allocate_subframes(AreaPlan(()), scenario, view=view.derive(()) if view else None)


def compute_throughput(plan: AreaPlan, scenario: Scenario,
                       baseline: AreaPlan | None = None) -> ThroughputReport:
    """Eqs. (1)-(4) plus serving ratio, RB gain and RB fractions."""
    bits = scenario.unicast_bits
    t_bb = broadcast_throughput(plan)
    t_bu = sum(x * int(bits[j]) for j, x in plan.fallback.items())
    t_u = sum(u * int(bits[j]) for j, u in plan.unicast.items())
    return _report(plan, scenario, t_bb, t_bu, t_u, baseline)


def compute_throughput_dynamic(plan: AreaPlan, scenario: Scenario, snapshot, epsilons,
                               baseline: AreaPlan | None = None) -> ThroughputReport:
    """Dynamic throughput: the broadcast term uses estimated counts scaled by each item's live fraction.

    ``snapshot`` maps (cell, item) to the estimated count; users Rate Increase
    removed from the area are subtracted from it. Fallback throughput of an
    item is scaled by the same live fraction.
    """
    bits = scenario.unicast_bits
    terms = []
    for a in plan.areas:
        for i in a.items:
            eps = epsilons.get(i, 0.0)
            if not 0.0 <= eps <= 1.0:
                raise ValueError(f"epsilon for item {i} outside [0, 1]")
            for c in sorted(a.cells):
                actual = len(scenario.users_by_cell_item.get((c, i), ()))
                w = max(0, int(snapshot.get((c, i), 0)) - (actual - a.served.get((c, i), 0)))
                terms.append(a.budgets[i] * a.rates[i] * w * eps)
    t_bb = math.fsum(terms)
    items = scenario.users.item
    t_bu = math.fsum(x * int(bits[j]) * epsilons.get(int(items[j]), 0.0)
                     for j, x in plan.fallback.items())
    t_u = sum(u * int(bits[j]) for j, u in plan.unicast.items())
    return _report(plan, scenario, t_bb, t_bu, t_u, baseline)
