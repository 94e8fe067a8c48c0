"""Static and dynamic experiment campaigns over parameter sweeps and seeds."""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .areas.engine import Evaluator
from .areas.model import ThroughputReport
from .areas.throughput import compute_throughput_dynamic, unicast_only_plan
from .config import ExperimentConfig
from .demand import churn_interest, estimate_interest, generate_timeline, live_frames
from .planners import PlannerConfig, mcf, mcf_premerge, scf, scf_prefusion, unicast_baseline
from .scenario import Scenario, ScenarioSpec, build_scenario, stream


@dataclass(frozen=True)
class Point:
    cells: int
    zones: int
    distribution: str
    service_rate: int
    max_mbsfn: int
    mode: str
    sigma0_sq: float | None = None

    def as_row(self) -> dict:
        return {"cells": self.cells, "zones": self.zones, "distribution": self.distribution,
                "service_rate": self.service_rate, "max_mbsfn": self.max_mbsfn,
                "constraint_i_mode": self.mode,
                "sigma0_sq": "" if self.sigma0_sq is None else self.sigma0_sq}

    @property
    def sort_key(self) -> tuple:
        return (self.cells, self.zones, self.distribution, self.service_rate, self.max_mbsfn,
                self.mode, -1.0 if self.sigma0_sq is None else self.sigma0_sq)


@dataclass
class RunRecord:
    point: Point
    seed: int
    planner: str
    kind: str  # "static" or "dynamic"
    report: ThroughputReport
    trace: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    timeseries: list[dict] = field(default_factory=list)
    plan_text: str = ""
    # served fraction of broadcast demand per service-rate class
    served_by_class: dict = field(default_factory=dict)

    @property
    def sort_key(self) -> tuple:
        return (self.kind, self.point.sort_key, self.seed, self.planner)


def scenario_spec(cfg: ExperimentConfig, cells: int, zones: int, distribution: str,
                  rate: int) -> ScenarioSpec:
    s = cfg.scenario
    return ScenarioSpec(cells=cells, zones=zones, distribution=distribution, rates=(rate,),
                        unicast_fraction=s.unicast_fraction, density=s.density,
                        items_per_zone=s.items_per_zone, neighbor_overlap=s.neighbor_overlap,
                        mixed_rates=s.mixed_rates, inter_site_distance=s.inter_site_distance)


def mixed_rate_scenario(cfg: ExperimentConfig, seed: int, cells: int | None = None,
                        zones: int | None = None, distribution: str | None = None) -> Scenario:
    s = cfg.scenario
    spec = scenario_spec(cfg, cells or s.cells[0], zones or s.zones[0],
                         distribution or s.distribution[0], s.service_rate[0])
    return build_scenario(replace(spec, mixed_rates=True), seed)


def planner_config(cfg: ExperimentConfig, max_mbsfn: int, mode: str) -> PlannerConfig:
    p = cfg.planner
    return PlannerConfig(tau=p.tau, max_mbsfn=max_mbsfn, constraint_i_mode=mode,
                         target_serve_fraction=p.target_serve_fraction,
                         fast_hill_climbing=p.fast_hill_climbing, mcf_exhaustive=p.mcf_exhaustive)


def _scenario_points(cfg):
    s = cfg.scenario
    return list(itertools.product(s.cells, s.zones, s.distribution, s.service_rate))


def _planner_points(cfg):
    return list(itertools.product(cfg.planner.max_mbsfn, cfg.planner.constraint_i_mode))


class _Planning:
    """Runs the configured planners for one demand view, sharing the stages
    that do not depend on Max_MBSFN or the constraint (i) mode."""

    def __init__(self, scenario, cfg, view=None):
        self.sc, self.cfg, self.view = scenario, cfg, view
        self._pre = {}
        base = planner_config(cfg, cfg.planner.max_mbsfn[0], cfg.planner.constraint_i_mode[0])
        t = time.perf_counter()
        self.baseline = unicast_baseline(scenario, view)
        self.t_base = time.perf_counter() - t
        self.base_cfg = base

    def run(self, planner, max_mbsfn, mode):
        pc = planner_config(self.cfg, max_mbsfn, mode)
        t = time.perf_counter()
        timings = {}
        if planner == "unicast":
            res = self.baseline
            timings["plan_s"] = self.t_base
        elif planner == "scf":
            if "scf" not in self._pre:
                self._pre["scf"] = scf_prefusion(self.sc, self.base_cfg, self.view)
                timings["prefusion_s"] = time.perf_counter() - t
            res = scf(self.sc, pc, prefusion=self._pre["scf"], baseline=self.baseline.plan)
        elif planner == "mcf":
            if "mcf" not in self._pre:
                self._pre["mcf"] = mcf_premerge(self.sc, self.base_cfg, self.view)
                timings["prefusion_s"] = time.perf_counter() - t
            res = mcf(self.sc, pc, premerge=self._pre["mcf"], baseline=self.baseline.plan)
        else:
            raise ValueError(f"unknown planner {planner!r}")
        timings["total_s"] = time.perf_counter() - t
        return res, timings


def run_static(cfg: ExperimentConfig, seed: int) -> list[RunRecord]:
    records = []
    for cells, zones, dist, rate in _scenario_points(cfg):
        sc = build_scenario(scenario_spec(cfg, cells, zones, dist, rate), seed)
        planning = _Planning(sc, cfg)
        for max_mbsfn, mode in _planner_points(cfg):
            point = Point(cells, zones, dist, rate, max_mbsfn, mode)
            for planner in cfg.planners:
                res, timings = planning.run(planner, max_mbsfn, mode)
                records.append(RunRecord(point, seed, planner, "static", res.report, res.trace,
                                         timings, plan_text=res.plan.to_text(),
                                         served_by_class=served_by_class(sc, res.plan)))
    return records


RATE_CLASSES = (("large", 2_000_000), ("medium", 1_000_000), ("small", 0))


def rate_class(rate: int) -> str:
    return next(name for name, lo in RATE_CLASSES if rate >= lo)


def served_by_class(sc: Scenario, plan) -> dict[str, float]:
    """Fraction of broadcast-interested users served (broadcast or fallback) per rate class."""
    served = set(plan.broadcast_served) | set(plan.fallback)
    total: dict[str, int] = {}
    hit: dict[str, int] = {}
    for j in plan.broadcast_served | plan.unserved | frozenset(plan.fallback):
        k = rate_class(sc.rate(int(sc.users.item[j])))
        total[k] = total.get(k, 0) + 1
        hit[k] = hit.get(k, 0) + (j in served)
    return {k: hit[k] / total[k] for k in sorted(total)}


# -- dynamic ----------------------------------------------------------------


def timed_scenario(sc: Scenario, horizon: int, duration_range, seed: int) -> Scenario:
    """Copy of ``sc`` whose items carry a random start and duration."""
    items = [sc.items[i] for i in sorted(sc.items)]
    timed = generate_timeline(items, horizon, duration_range, stream(seed, "timeline"))
    return Scenario(sc.grid, sc.radio, sc.catalog, sc.users, {it.id: it for it in timed})


def _sigmas(keys, sigma0_sq: float, overrides) -> np.ndarray:
    overrides = overrides or {}
    return np.array([overrides.get(i, sigma0_sq) for _, i in keys], dtype=float)


def window_estimates(sc: Scenario, t0: int, period: int, sigma0_sq: float,
                     rng: np.random.Generator, overrides=None) -> tuple[dict, dict]:
    """(live frames per item, estimated w~ per (cell, item)) for the window at ``t0``.

    ``overrides`` optionally maps item id to its own sigma0^2.
    """
    live = {i: live_frames(it, t0, period) for i, it in sc.items.items()}
    keys = [k for k in sorted(sc.users_by_cell_item) if live[k[1]] > 0]
    w = np.array([len(sc.users_by_cell_item[k]) for k in keys], dtype=np.int64)
    t_s = np.array([max(0, sc.items[i].start_frame - t0) for _, i in keys], dtype=np.int64)
    sig = _sigmas(keys, sigma0_sq, overrides)
    est = estimate_interest(w, t_s, sig, rng) if len(keys) else np.zeros(0, dtype=np.int64)
    return live, {k: int(v) for k, v in zip(keys, np.atleast_1d(est))}


def realized_counts(sc: Scenario, t0: int, period: int, live: dict, sigma0_sq: float,
                    rng: np.random.Generator, overrides=None) -> dict:
    """In-window interest per (cell, item): churned actual counts."""
    keys = [k for k in sorted(sc.users_by_cell_item) if live[k[1]] > 0]
    w = np.array([len(sc.users_by_cell_item[k]) for k in keys], dtype=np.int64)
    t_d = np.array([sc.items[i].end_frame - max(t0, sc.items[i].start_frame) for _, i in keys],
                   dtype=np.int64)
    sig = _sigmas(keys, sigma0_sq, overrides)
    out = churn_interest(w, t_d, sig, rng) if len(keys) else np.zeros(0, dtype=np.int64)
    return {k: int(v) for k, v in zip(keys, np.atleast_1d(out))}


def realized_series(sc: Scenario, plan, counts: dict, t0: int, period: int) -> list[dict]:
    """Per-frame realized throughput of a fixed plan over one window.

    Budgets and rates stay as planned; the broadcast term uses the realized
    counts (minus users taken out of broadcast by Rate Increase), fallback
    throughput counts only while the user's item is live.
    """
    bits = sc.unicast_bits
    per_item_bb: dict[int, int] = {}
    for a in plan.areas:
        for i in a.items:
            for c in a.cells:
                actual = len(sc.users_by_cell_item.get((c, i), ()))
                excluded = actual - a.served.get((c, i), 0)
                w = max(0, counts.get((c, i), 0) - excluded)
                per_item_bb[i] = per_item_bb.get(i, 0) + a.budgets[i] * a.rates[i] * w
    per_item_bu: dict[int, int] = {}
    for j, x in plan.fallback.items():
        i = int(sc.users.item[j])
        per_item_bu[i] = per_item_bu.get(i, 0) + x * int(bits[j])
    t_u = sum(u * int(bits[j]) for j, u in plan.unicast.items())
    rows = []
    for t in range(t0, t0 + period):
        on = [i for i, it in sc.items.items() if it.start_frame <= t < it.end_frame]
        t_bb = sum(per_item_bb.get(i, 0) for i in on)
        t_bu = sum(per_item_bu.get(i, 0) for i in on)
        rows.append({"frame": t, "window": t0, "T_bb": t_bb, "T_bu": t_bu, "T_u": t_u,
                     "T_total": t_bb + t_bu + t_u})
    return rows


def _plan_window(planner, sc, cfg, view, max_mbsfn, mode, cache):
    pc = planner_config(cfg, max_mbsfn, mode)
    if planner == "unicast":
        return unicast_baseline(sc, view)
    if planner == "scf":
        if "scf" not in cache:
            cache["scf"] = scf_prefusion(sc, pc, view)
        return scf(sc, pc, prefusion=cache["scf"])
    if "mcf" not in cache:
        cache["mcf"] = mcf_premerge(sc, pc, view)
    return mcf(sc, pc, premerge=cache["mcf"])


def run_dynamic(cfg: ExperimentConfig, seed: int) -> list[RunRecord]:
    dyn = cfg.dynamic
    if dyn is None:
        raise ValueError("config has no dynamic block")
    P = dyn.period
    records = []
    for cells, zones, dist, rate in _scenario_points(cfg):
        base = build_scenario(scenario_spec(cfg, cells, zones, dist, rate), seed)
        sc = timed_scenario(base, dyn.horizon, dyn.duration_range, seed)
        for sigma in dyn.sigma0_sq:
            # the same noise streams for every sigma keep comparisons paired
            est_rng, churn_rng = stream(seed, "noise"), stream(seed, "churn")
            windows = []
            for t0 in range(0, dyn.horizon, P):
                live, est = window_estimates(sc, t0, P, sigma, est_rng, dyn.item_sigma0_sq)
                counts = realized_counts(sc, t0, P, live, sigma, churn_rng, dyn.item_sigma0_sq)
                windows.append((t0, live, est, counts))
            for max_mbsfn, mode in _planner_points(cfg):
                point = Point(cells, zones, dist, rate, max_mbsfn, mode, sigma)
                for planner in cfg.planners:
                    t = time.perf_counter()
                    series, reports, trace = [], [], []
                    for t0, live, est, counts in windows:
                        view = Evaluator(sc, estimates=est, live=live, period=P)
                        res = _plan_window(planner, sc, cfg, view, max_mbsfn, mode, {})
                        eps = {i: f / P for i, f in live.items()}
                        rep = compute_throughput_dynamic(res.plan, sc, est, eps,
                                                         baseline=unicast_only_plan(sc, view))
                        rows = realized_series(sc, res.plan, counts, t0, P)
                        for r in rows:
                            r["T_planned"] = rep.T_total
                        series += rows
                        reports.append(rep)
                        trace += res.trace
                    summary = _dynamic_summary(series, reports)
                    records.append(RunRecord(point, seed, planner, "dynamic", summary, trace,
                                             {"total_s": time.perf_counter() - t}, series))
    return records


def _dynamic_summary(series, reports) -> ThroughputReport:
    """Realized throughput averaged over frames; other metrics averaged over windows."""
    n = len(series)
    fields = {k: float(np.mean([getattr(r, k) for r in reports]))
              for k in ("serving_ratio", "rb_gain", "rb_frac_bb", "rb_frac_bu", "rb_frac_uu",
                        "unserved_fraction", "serving_ratio_users", "mean_area_size")}
    return ThroughputReport(
        T_bb=sum(r["T_bb"] for r in series) / n, T_bu=sum(r["T_bu"] for r in series) / n,
        T_u=sum(r["T_u"] for r in series) / n,
        n_areas=int(round(np.mean([r.n_areas for r in reports]))),
        n_broadcast_users=int(round(np.mean([r.n_broadcast_users for r in reports]))),
        n_unserved=int(round(np.mean([r.n_unserved for r in reports]))), **fields)


def run_seed(cfg: ExperimentConfig, seed: int) -> list[RunRecord]:
    out = []
    if cfg.static:
        out += run_static(cfg, seed)
    if cfg.dynamic is not None:
        out += run_dynamic(cfg, seed)
    return out


def run_experiment(cfg: ExperimentConfig, seeds=None, threads: int = 1) -> list[RunRecord]:
    """All records for all seeds, merged in deterministic (kind, point, seed, planner) order."""
    seeds = list(cfg.seeds if seeds is None else seeds)
    if threads <= 1 or len(seeds) <= 1:
        records = [r for s in seeds for r in run_seed(cfg, s)]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            records = [r for batch in pool.map(run_seed, [cfg] * len(seeds), seeds) for r in batch]
    return sorted(records, key=lambda r: r.sort_key)


__all__ = ["Point", "RunRecord", "run_static", "run_dynamic", "run_experiment", "run_seed",
           "mixed_rate_scenario", "scenario_spec", "planner_config"]
