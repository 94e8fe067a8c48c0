"""The SCF pipeline, MCF and unicast entry points, and the exhaustive oracle."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from ..areas.constraints import check_constraint_i
from ..areas.engine import Evaluator, evaluate_reference
from ..areas.model import AreaPlan, AreaSpec, ThroughputReport
from ..areas.throughput import compute_throughput, finalize_plan, unicast_only_plan
from .aggregation import cell_aggregation
from .base import PlannerConfig, TraceRecord
from .fusion import area_fusion
from .hill_climbing import hill_climbing
from .mcf import mcf_specs
from .rate_increase import rate_increase


@dataclass
class PlannerResult:
    plan: AreaPlan
    report: ThroughputReport
    trace: list[TraceRecord] = field(default_factory=list)
    # planning view (removals, estimates) the plan was built for
    view: Evaluator | None = field(default=None, repr=False)
    T_planned: float = 0.0

    def __iter__(self):
        return iter((self.plan, self.report))


@dataclass
class PreFusion:
    """SCF state after Rate Increase; reusable across Max_MBSFN and constraint (i) modes."""

    T: int
    specs: list[AreaSpec]
    view: Evaluator
    trace: list[TraceRecord]


def scf_prefusion(scenario, config: PlannerConfig = PlannerConfig(),
                  ev: Evaluator | None = None) -> PreFusion:
    ev = ev if ev is not None else Evaluator(scenario)
    trace: list[TraceRecord] = []
    cands = cell_aggregation(scenario.grid, ev.interest_map(), tau=config.tau)
    trace.append(TraceRecord("cell_aggregation", len(cands), 0, ev.empty_total() / ev.period))
    T, specs = hill_climbing(cands, ev, config)
    trace.append(TraceRecord("hill_climbing", len(cands), len(specs), T / ev.period))
    T, specs, ev = rate_increase(specs, T, ev, config, candidates=cands, trace=trace)
    trace.append(TraceRecord("rate_increase", len(cands), len(specs), T / ev.period))
    return PreFusion(T, specs, ev, trace)


def _result(scenario, specs, view, T, trace, baseline=None) -> PlannerResult:
    plan = finalize_plan(specs, scenario, view=view)
    report = compute_throughput(plan, scenario, baseline)
    return PlannerResult(plan, report, trace, view, T / view.period)


def scf(scenario, config: PlannerConfig = PlannerConfig(), prefusion: PreFusion | None = None,
        ev: Evaluator | None = None, baseline=None) -> PlannerResult:
    """Cell Aggregation, Hill Climbing, Rate Increase, Area Fusion."""
    if prefusion is None:
        prefusion = scf_prefusion(scenario, config, ev)
    trace = list(prefusion.trace)
    T, specs = area_fusion(prefusion.specs, prefusion.view, scenario.grid, config, trace)
    return _result(scenario, specs, prefusion.view, T, trace, baseline)


def mcf(scenario, config: PlannerConfig = PlannerConfig(), premerge=None,
        ev: Evaluator | None = None, baseline=None) -> PlannerResult:
    trace: list[TraceRecord] = []
    T, specs, view = mcf_specs(scenario, config, premerge, ev, trace)
    return _result(scenario, specs, view, T, trace, baseline)


def unicast_baseline(scenario, ev: Evaluator | None = None) -> PlannerResult:
    view = ev.derive(()) if ev is not None else Evaluator(scenario)
    plan = unicast_only_plan(scenario, view)
    report = compute_throughput(plan, scenario, plan)
    return PlannerResult(plan, report, [TraceRecord("unicast", 0, 0, report.T_total)], view,
                         view.empty_total() / view.period)


ORACLE_MAX_CANDIDATES = 15
ORACLE_MAX_CELLS = 10


def oracle_optimal(scenario, config: PlannerConfig = PlannerConfig(),
                   ev: Evaluator | None = None) -> PlannerResult:
    """Best subset of cell-aggregation candidates under (i)-(iv), by enumeration."""
    if scenario.n_cells > ORACLE_MAX_CELLS:
        raise ValueError(f"oracle limited to {ORACLE_MAX_CELLS} cells")
    ev = ev if ev is not None else Evaluator(scenario)
    cands = [a.spec for a in cell_aggregation(scenario.grid, ev.interest_map(), tau=config.tau)]
    if len(cands) > ORACLE_MAX_CANDIDATES:
        raise ValueError(f"oracle limited to {ORACLE_MAX_CANDIDATES} candidates")
    best_T, best = ev.empty_total(), []
    for k in range(1, len(cands) + 1):
        for sub in combinations(cands, k):
            sub = list(sub)
            if not check_constraint_i(sub, scenario.grid, config.constraint_i_mode, config.max_mbsfn):
                continue
            ok, T = evaluate_reference(ev, sub)
            if ok and T > best_T:
                best_T, best = T, sub
    trace = [TraceRecord("oracle", len(cands), len(best), best_T / ev.period)]
    return _result(scenario, best, ev, best_T, trace)
