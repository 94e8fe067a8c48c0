"""Cell aggregation: threshold cells per item and collect connected components."""

from __future__ import annotations

from collections import deque

from ..topology import CellGrid
from .base import CandidateArea


def cell_aggregation(grid: CellGrid, interest, items=None, tau: int = 2,
                     cells=None) -> list[CandidateArea]:
    """Connected components of ``{c : interest[(c, i)] >= tau}`` for every item.

    ``interest`` maps (cell, item) to a user count; ``cells`` optionally limits
    the search to a subset of the grid. Components are emitted per item in
    ascending item order, each discovered from its lowest cell id.
    """
    if tau < 1:
        raise ValueError("tau must be >= 1")
    allowed = set(range(len(grid))) if cells is None else set(cells)
    if items is None:
        items = sorted({i for (_, i), w in interest.items() if w >= tau})
    out = []
    for i in sorted(items):
        chosen = {c for c in allowed if interest.get((c, i), 0) >= tau}
        for start in sorted(chosen):
            if start not in chosen:
                continue
            chosen.discard(start)
            comp = [start]
            todo = deque([start])
            while todo:
                c = todo.popleft()
                for d in sorted(grid.adjacency[c]):
                    if d in chosen:
                        chosen.discard(d)
                        comp.append(d)
                        todo.append(d)
            cs = frozenset(comp)
            out.append(CandidateArea(i, cs, {c: interest[(c, i)] for c in sorted(cs)}))
    return out
