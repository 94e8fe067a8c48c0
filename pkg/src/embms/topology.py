"""Hexagonal cell layout, adjacency and interest zones."""

from __future__ import annotations

import io
import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

# axial neighbour offsets, in ring-walk order
HEX_DIRECTIONS = ((1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1))


@dataclass(frozen=True)
class Cell:
    id: int
    center: tuple[float, float]
    zone_id: int = 0
    axial: tuple[int, int] = (0, 0)


@dataclass(frozen=True)
class CellGrid:
    cells: tuple[Cell, ...]
    inter_site_distance: float
    adjacency: tuple[frozenset[int], ...] = field(repr=False)

    def __len__(self) -> int:
        return len(self.cells)

    @property
    def centers(self) -> np.ndarray:
        return np.array([c.center for c in self.cells], dtype=float)

    @property
    def zone_ids(self) -> np.ndarray:
        return np.array([c.zone_id for c in self.cells], dtype=int)

    @property
    def zone_count(self) -> int:
        return int(self.zone_ids.max()) + 1

    def adjacent_pairs(self) -> list[tuple[int, int]]:
        return [(a, b) for a in range(len(self)) for b in sorted(self.adjacency[a]) if a < b]

    def to_text(self) -> str:
        """One ``id,x,y,zone_id`` record per cell, fixed formatting."""
        buf = io.StringIO()
        buf.write("id,x,y,zone_id\n")
        for c in self.cells:
            buf.write(f"{c.id},{c.center[0]:.3f},{c.center[1]:.3f},{c.zone_id}\n")
        return buf.getvalue()


def _ring(radius: int) -> list[tuple[int, int]]:
    if radius == 0:
        return [(0, 0)]
    q, r = HEX_DIRECTIONS[4][0] * radius, HEX_DIRECTIONS[4][1] * radius
    out = []
    for side in range(6):
        dq, dr = HEX_DIRECTIONS[side]
        for _ in range(radius):
            out.append((q, r))
            q, r = q + dq, r + dr
    return out


def axial_to_xy(q: int, r: int, isd: float) -> tuple[float, float]:
    return (isd * (q + r / 2.0), isd * (math.sqrt(3.0) / 2.0) * r)


def build_hex_grid(cell_count: int, inter_site_distance: float = 500.0) -> CellGrid:
    """Concentric hexagonal rings around a central cell, truncated to ``cell_count``."""
    if cell_count < 1:
        raise ValueError(f"cell_count must be >= 1, got {cell_count}")
    if not inter_site_distance > 0:
        raise ValueError(f"inter_site_distance must be > 0, got {inter_site_distance}")

    coords: list[tuple[int, int]] = []
    radius = 0
    while len(coords) < cell_count:
        coords.extend(_ring(radius))
        radius += 1
    coords = coords[:cell_count]

    index = {qr: i for i, qr in enumerate(coords)}
    adjacency = []
    for q, r in coords:
        adjacency.append(frozenset(index[(q + dq, r + dr)] for dq, dr in HEX_DIRECTIONS
                                   if (q + dq, r + dr) in index))
    cells = tuple(Cell(id=i, center=axial_to_xy(q, r, inter_site_distance), axial=(q, r))
                  for i, (q, r) in enumerate(coords))
    return CellGrid(cells=cells, inter_site_distance=float(inter_site_distance),
                    adjacency=tuple(adjacency))


def neighbors(grid: CellGrid, cell_id: int) -> frozenset[int]:
    if not 0 <= cell_id < len(grid):
        raise KeyError(f"unknown cell id {cell_id}")
    return grid.adjacency[cell_id]


def is_connected(grid: CellGrid, cell_ids) -> bool:
    """Flood fill restricted to ``cell_ids``."""
    members = set(cell_ids)
    if not members:
        return False
    start = min(members)
    seen = {start}
    todo = deque([start])
    while todo:
        c = todo.popleft()
        for d in grid.adjacency[c]:
            if d in members and d not in seen:
                seen.add(d)
                todo.append(d)
    return len(seen) == len(members)


def _sweep_order(grid: CellGrid) -> list[int]:
    # serpentine over axial columns so consecutive cells stay adjacent
    by_col: dict[int, list[int]] = {}
    for c in grid.cells:
        by_col.setdefault(c.axial[0], []).append(c.id)
    order = []
    for k, q in enumerate(sorted(by_col)):
        col = sorted(by_col[q], key=lambda cid: grid.cells[cid].axial[1], reverse=bool(k % 2))
        order.extend(col)
    return order


def _split(grid, order, sizes, start=0):
    """Depth-first search for connected consecutive chunks, sizes flexed by +-2."""
    if not sizes:
        return [] if start == len(order) else None
    target = sizes[0]
    remaining = len(order) - start
    if len(sizes) == 1:
        chunk = order[start:]
        return [chunk] if is_connected(grid, chunk) else None
    for delta in (0, 1, -1, 2, -2):
        size = target + delta
        if size < 1 or size > remaining - (len(sizes) - 1):
            continue
        chunk = order[start:start + size]
        if not is_connected(grid, chunk):
            continue
        rest = _split(grid, order, sizes[1:], start + size)
        if rest is not None:
            return [chunk] + rest
    return None


def assign_zones(grid: CellGrid, zone_count: int) -> CellGrid:
    """Partition the grid into contiguous, near-equal blocks of cells.

    Cells are swept column by column in axial coordinates (serpentine) and cut
    into consecutive chunks; the first ``len % zone_count`` zones get the extra
    cell. When a cut would leave a zone disconnected the chunk sizes are
    flexed by a couple of cells.
    """
    n = len(grid)
    if zone_count < 1 or zone_count > n:
        raise ValueError(f"zone_count must be in 1..{n}, got {zone_count}")
    base, extra = divmod(n, zone_count)
    sizes = [base + 1] * extra + [base] * (zone_count - extra)
    order = _sweep_order(grid)
    chunks = _split(grid, order, sizes)
    if chunks is None:
        raise RuntimeError(f"could not split {n} cells into {zone_count} connected zones")
    zone_of = {}
    for z, chunk in enumerate(chunks):
        for cid in chunk:
            zone_of[cid] = z
    cells = tuple(replace(c, zone_id=zone_of[c.id]) for c in grid.cells)
    return replace(grid, cells=cells)


def zone_adjacency(grid: CellGrid) -> dict[int, set[int]]:
    zones = grid.zone_ids
    adj: dict[int, set[int]] = {z: set() for z in range(grid.zone_count)}
    for a, b in grid.adjacent_pairs():
        if zones[a] != zones[b]:
            adj[zones[a]].add(zones[b])
            adj[zones[b]].add(zones[a])
    return adj


def dilate(grid: CellGrid, cell_ids) -> set[int]:
    out = set(cell_ids)
    for c in cell_ids:
        out |= grid.adjacency[c]
    return out
