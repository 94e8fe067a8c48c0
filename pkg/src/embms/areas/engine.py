"""Per-cell throughput evaluation shared by every planner.

Throughput decomposes over cells: a cell's contribution depends only on the
(item, B, rho) triples broadcast in it and on which users may be served by
broadcast. Everything is kept in integers ("numerators") so that totals are
exact and independent of summation order: the per-frame value is
``numerator / period``. Static runs use ``period == 1`` and every item live
for one frame; dynamic planning weighs item ``i`` by its live frames.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..radio import rb_demand_per_frame
from ..scenario import Scenario
from .model import MAX_AREAS_PER_CELL, AreaSpec


@dataclass(frozen=True)
class CellOutcome:
    feasible: bool
    tbb: int = 0
    tbu: int = 0
    tu: int = 0
    bc: int = 0  # broadcast RBs
    fb: int = 0  # fallback RBs
    uc: int = 0  # unicast RBs
    n_bcast: int = 0
    n_fallback: int = 0
    n_unserved: int = 0
    served_demand: int = 0  # rate * frame_ms * live, summed

    @property
    def total(self) -> int:
        return self.tbb + self.tbu + self.tu


INFEASIBLE_CELL = CellOutcome(False)


def pack_budget(loads: np.ndarray, budget: int) -> np.ndarray:
    """Spread ``budget`` RBs over MBSFN subframes for an area whose cells carry ``loads``.

    Each subframe gets ``budget // K``; remainder RBs go one at a time to the
    subframe whose busiest area cell is least loaded (lowest index on ties).
    """
    n_sf = loads.shape[1]
    base, rem = divmod(int(budget), n_sf)
    alloc = [base] * n_sf
    if rem:
        colmax = loads.max(axis=0).tolist() if len(loads) else [0] * n_sf
        for _ in range(rem):
            k = min(range(n_sf), key=colmax.__getitem__)
            alloc[k] += 1
            colmax[k] += 1
    return np.array(alloc, dtype=np.int64)


class Evaluator:
    """Throughput of plans for one demand view (eligibility, estimates, live frames)."""

    def __init__(self, scenario: Scenario, removed=frozenset(), estimates=None,
                 live=None, period: int = 1):
        self.sc = scenario
        self.removed = frozenset(int(j) for j in removed)
        self._removed_arr = np.array(sorted(self.removed), dtype=np.int64)
        self.estimates = estimates
        self.live_frames = live
        self.period = int(period)
        radio = scenario.radio
        self.R = radio.rbs_per_frame
        self.cap_bcast = radio.broadcast_cap
        self.cap_sf = radio.rbs_per_subframe
        self.n_sf = radio.mbsfn_capable_subframes
        self.frame_ms = radio.frame_ms
        self._cells: dict[int, tuple] = {}
        self._memo: dict[tuple, CellOutcome] = {}
        self._area_memo: dict[tuple, tuple[int, int] | None] = {}
        self._elig = {key: len(ids) for key, ids in scenario.users_by_cell_item.items()}
        serving, item = scenario.users.serving, scenario.users.item
        for j in self.removed:
            key = (int(serving[j]), int(item[j]))
            if key in self._elig:
                self._elig[key] -= 1

    def derive(self, removed) -> Evaluator:
        """Same demand view with a different set of users excluded from broadcast."""
        return Evaluator(self.sc, removed, self.estimates, self.live_frames, self.period)

    def live(self, item: int) -> int:
        if self.live_frames is None:
            return 1
        return int(self.live_frames.get(item, 0))

    def eligible_count(self, c: int, i: int) -> int:
        return self._elig.get((c, i), 0)

    def weight(self, c: int, i: int) -> int:
        """Users counted in the broadcast throughput of (c, i): w, or the estimate."""
        n = self._elig.get((c, i), 0)
        if self.estimates is None:
            return n
        actual = len(self.sc.users_by_cell_item.get((c, i), ()))
        return max(0, int(self.estimates.get((c, i), 0)) - (actual - n))

    def interest(self, c: int, i: int) -> int:
        return self.weight(c, i) if self.live(i) > 0 else 0

    def interest_map(self) -> dict[tuple[int, int], int]:
        keys = set(self.sc.users_by_cell_item)
        if self.estimates is not None:
            keys |= set(self.estimates)
        out = {}
        for c, i in sorted(keys):
            w = self.interest(c, i)
            if w > 0:
                out[(c, i)] = w
        return out

    def eligible_users(self, cells, item) -> tuple[np.ndarray, np.ndarray]:
        """(user ids, per-user broadcast bits/RB) for eligible users of ``item`` in ``cells``."""
        ids, bits = self.sc.broadcast_bits(frozenset(cells), item)
        if self.removed and len(ids):
            keep = ~np.isin(ids, self._removed_arr)
            ids, bits = ids[keep], bits[keep]
        return ids, bits

    def area_item(self, cells: frozenset, item: int):
        """(B, rho) for broadcasting ``item`` over ``cells``; None if it cannot be done."""
        key = (cells, item)
        if key in self._area_memo:
            return self._area_memo[key]
        out = None
        if self.live(item) > 0:
            _, bits = self.eligible_users(cells, item)
            if len(bits):
                rho = int(bits.min())
                budget = rb_demand_per_frame(self.sc.rate(item), rho, self.frame_ms)
                if budget is not None and budget <= self.cap_bcast:
                    out = (budget, rho)
        self._area_memo[key] = out
        return out

    def resolve(self, spec: AreaSpec):
        params = []
        for i in spec.items:
            p = self.area_item(spec.cells, i)
            if p is None:
                return None
            params.append((i, p[0], p[1]))
        return params

    # -- per cell ---------------------------------------------------------

    def _cell_data(self, c: int):
        data = self._cells.get(c)
        if data is None:
            sc = self.sc
            cands = []
            for i in sc.items_by_cell.get(c, ()):
                live = self.live(i)
                if live == 0:
                    continue
                rate = sc.rate(i)
                for j in sc.users_by_cell_item[(c, i)].tolist():
                    b = int(sc.unicast_bits[j])
                    x = rb_demand_per_frame(rate, b, self.frame_ms)
                    value = x * b * live if x is not None else 0
                    cands.append((-b, j, i, x, value, rate * self.frame_ms * live,
                                  j not in self.removed))
            cands.sort()
            cands = [t[1:] for t in cands]
            uni = sc.unicast_by_cell.get(c, np.zeros(0, dtype=np.int64))
            ubits = [int(sc.unicast_bits[j]) for j in uni.tolist() if sc.unicast_bits[j] > 0]
            prefix = np.concatenate([[0], np.cumsum(ubits, dtype=np.int64)]).tolist()
            data = (cands, ubits, prefix)
            self._cells[c] = data
        return data

    def allocate_cell(self, c: int, items, bc: int):
        """Fallback admission and unicast split for one cell.

        Users not served by broadcast are admitted at their full rate by
        decreasing CQI while the frame has room; the residual is split evenly
        over native unicast users (remainder RBs to the lowest user ids).
        Returns (admitted [(user, X)], unserved [user], unicast [(user, U)], served).
        """
        cands, ubits, _ = self._cell_data(c)
        room = self.R - bc
        admitted, unserved, served = [], [], []
        for j, i, x, _, _, elig in cands:
            if elig and i in items:
                served.append(j)
            elif x is not None and x <= room:
                admitted.append((j, x))
                room -= x
            else:
                unserved.append(j)
        uni = [j for j in self.sc.unicast_by_cell.get(c, np.zeros(0, dtype=np.int64)).tolist()
               if self.sc.unicast_bits[j] > 0]
        alloc = []
        if uni:
            share, extra = divmod(room, len(uni))
            alloc = [(j, share + (1 if k < extra else 0)) for k, j in enumerate(uni)]
        return admitted, unserved, alloc, served

    def cell(self, c: int, cover: tuple) -> CellOutcome:
        """Outcome of cell ``c`` broadcasting ``cover`` = sorted ((item, B, rho), ...)."""
        key = (c, cover)
        out = self._memo.get(key)
        if out is not None:
            return out
        bc = 0
        tbb = 0
        items = set()
        for i, b, rho in cover:
            bc += b
            tbb += b * rho * self.weight(c, i) * self.live(i)
            items.add(i)
        if bc > self.cap_bcast:
            out = INFEASIBLE_CELL
        else:
            cands, ubits, prefix = self._cell_data(c)
            room = self.R - bc
            fb = tbu = n_b = n_fb = n_un = served = 0
            for j, i, x, value, dem, elig in cands:
                if elig and i in items:
                    n_b += 1
                    served += dem
                elif x is not None and x <= room:
                    room -= x
                    fb += x
                    tbu += value
                    n_fb += 1
                    served += dem
                else:
                    n_un += 1
            n = len(ubits)
            if n:
                share, extra = divmod(room, n)
                tu = (share * prefix[n] + prefix[extra]) * self.period
                uc = room
            else:
                tu = uc = 0
            out = CellOutcome(True, tbb, tbu, tu, bc, fb, uc, n_b, n_fb, n_un, served)
        if len(self._memo) > 500_000:
            self._memo.clear()
        self._memo[key] = out
        return out

    def total_demand(self) -> int:
        """Broadcast demand numerator if every interested user were served."""
        return sum(t[4] for c in range(self.sc.n_cells) for t in self._cell_data(c)[0])

    def empty_total(self) -> int:
        return sum(self.cell(c, ()).total for c in range(self.sc.n_cells))


class PlanState:
    """Incrementally maintained plan: per-cell cover, memberships and subframe loads."""

    def __init__(self, ev: Evaluator, specs=()):
        self.ev = ev
        n = ev.sc.n_cells
        self.cover: list[dict[int, tuple[int, int]]] = [dict() for _ in range(n)]
        self.members = np.zeros(n, dtype=np.int64)
        self.loads = np.zeros((n, ev.n_sf), dtype=np.int64)
        self.outcomes = [ev.cell(c, ()) for c in range(n)]
        self.total = sum(o.total for o in self.outcomes)
        self.served = sum(o.served_demand for o in self.outcomes)
        self.specs: list[AreaSpec] = []
        for s in specs:
            if not self.add(s):
                raise ValueError(f"initial plan is infeasible at {s}")

    def _cover_key(self, c, extra=()):
        cur = self.cover[c]
        items = [(i, b, r) for i, (b, r) in cur.items()] + list(extra)
        return tuple(sorted(items))

    def probe(self, spec: AreaSpec):
        """(feasible, delta, commit-data) of adding ``spec`` without changing the state.

        ``delta`` is the throughput change; the served-demand change is
        available from the commit data via ``served_delta``.
        """
        params = self.ev.resolve(spec)
        if params is None:
            return False, 0, None
        cells = sorted(spec.cells)
        new_out = []
        delta = 0
        for c in cells:
            if self.members[c] >= MAX_AREAS_PER_CELL:
                return False, 0, None
            cur = self.cover[c]
            if any(i in cur for i, _, _ in params):
                return False, 0, None
            o = self.ev.cell(c, self._cover_key(c, params))
            if not o.feasible:
                return False, 0, None
            new_out.append(o)
            delta += o.total - self.outcomes[c].total
        sub = self.loads[cells]
        for _, b, _ in params:
            sub = sub + pack_budget(sub, b)
        if sub.max(initial=0) > self.ev.cap_sf:
            return False, 0, None
        return True, delta, (params, cells, new_out, sub)

    def add(self, spec: AreaSpec) -> bool:
        ok, delta, data = self.probe(spec)
        if not ok:
            return False
        params, cells, new_out, sub = data
        for c, o in zip(cells, new_out):
            for i, b, r in params:
                self.cover[c][i] = (b, r)
            self.members[c] += 1
            self.outcomes[c] = o
        self.loads[cells] = sub
        self.total += delta
        self.served += self.served_delta(data)
        self.specs.append(spec)
        return True

    def served_delta(self, data) -> int:
        _, cells, new_out, _ = data
        return sum(o.served_demand - self.outcomes[c].served_demand for c, o in zip(cells, new_out))

    def summary(self) -> CellOutcome:
        keys = ("tbb", "tbu", "tu", "bc", "fb", "uc", "n_bcast", "n_fallback", "n_unserved",
                "served_demand")
        return CellOutcome(True, **{k: sum(getattr(o, k) for o in self.outcomes) for k in keys})


def evaluate_reference(ev: Evaluator, specs, served: bool = False):
    """Feasibility under constraints (ii)-(iv) and total throughput numerator, from scratch.

    With ``served`` the served broadcast demand is returned as a third value.
    """
    n = ev.sc.n_cells
    cover: list[list[tuple[int, int, int]]] = [[] for _ in range(n)]
    members = [0] * n
    loads = np.zeros((n, ev.n_sf), dtype=np.int64)
    for spec in specs:
        params = ev.resolve(spec)
        if params is None:
            return (False, 0, 0) if served else (False, 0)
        cells = sorted(spec.cells)
        for c in cells:
            members[c] += 1
            cover[c].extend(params)
        for _, b, _ in params:
            loads[cells] += pack_budget(loads[cells], b)
    fail = (False, 0, 0) if served else (False, 0)
    if max(members, default=0) > MAX_AREAS_PER_CELL or loads.max(initial=0) > ev.cap_sf:
        return fail
    total = demand = 0
    for c in range(n):
        items = [t[0] for t in cover[c]]
        if len(items) != len(set(items)):
            return fail
        o = ev.cell(c, tuple(sorted(cover[c])))
        if not o.feasible:
            return fail
        total += o.total
        demand += o.served_demand
    return (True, total, demand) if served else (True, total)


def layout_of(ev: Evaluator, specs) -> np.ndarray:
    """Broadcast RBs per cell and MBSFN subframe, packing areas in plan order."""
    loads = np.zeros((ev.sc.n_cells, ev.n_sf), dtype=np.int64)
    for spec in specs:
        params = ev.resolve(spec)
        cells = sorted(spec.cells)
        for _, b, _ in params or ():
            loads[cells] += pack_budget(loads[cells], b)
    return loads
