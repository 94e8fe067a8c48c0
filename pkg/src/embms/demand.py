"""Users, zone catalogs, content interest and the dynamic-demand noise models."""

from __future__ import annotations

import io
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, Delaunay
from scipy.stats import truncnorm

from .radio import RadioConfig, rx_power_mw
from .topology import CellGrid, zone_adjacency

UNICAST = -1
ITEMS_PER_ZONE = 16
EXP_PARAMETER = 3.5


@dataclass(frozen=True)
class ContentItem:
    id: int
    service_rate: int  # bit/s
    start_frame: int = 0
    duration_frames: int = 1

    def __post_init__(self):
        if self.service_rate <= 0:
            raise ValueError(f"item {self.id}: service_rate must be positive")
        if self.duration_frames < 1 or self.start_frame < 0:
            raise ValueError(f"item {self.id}: bad timing")

    @property
    def end_frame(self) -> int:
        return self.start_frame + self.duration_frames


@dataclass(frozen=True)
class ZoneCatalog:
    """Per-zone item lists, ordered by popularity rank (rank 0 first)."""

    zones: tuple[tuple[int, ...], ...]
    rates: dict[int, int] = field(repr=False)
    overlaps: dict[tuple[int, int], int] = field(default_factory=dict, repr=False)

    @property
    def item_ids(self) -> list[int]:
        return sorted({i for z in self.zones for i in z})

    def to_text(self) -> str:
        buf = io.StringIO()
        buf.write("zone,rank,item,rate\n")
        for z, items in enumerate(self.zones):
            for k, i in enumerate(items):
                buf.write(f"{z},{k},{i},{self.rates[i]}\n")
        return buf.getvalue()


@dataclass(frozen=True)
class UserPopulation:
    positions: np.ndarray  # (U, 2) metres
    serving: np.ndarray  # (U,) cell ids
    item: np.ndarray  # (U,) item id or UNICAST

    def __len__(self) -> int:
        return len(self.serving)

    @property
    def broadcast_mask(self) -> np.ndarray:
        return self.item != UNICAST

    def with_items(self, item) -> UserPopulation:
        item = np.asarray(item, dtype=np.int64)
        item.setflags(write=False)
        return UserPopulation(self.positions, self.serving, item)

    def to_text(self) -> str:
        buf = io.StringIO()
        buf.write("id,x,y,serving_cell,item\n")
        for j in range(len(self)):
            x, y = self.positions[j]
            buf.write(f"{j},{x:.3f},{y:.3f},{self.serving[j]},{self.item[j]}\n")
        return buf.getvalue()


def _footprint(grid: CellGrid) -> np.ndarray:
    radius = grid.inter_site_distance / math.sqrt(3.0)
    angles = np.deg2rad(30.0 + 60.0 * np.arange(6))
    corners = np.stack([np.cos(angles), np.sin(angles)], axis=1) * radius
    return (grid.centers[:, None, :] + corners[None, :, :]).reshape(-1, 2)


def generate_users(grid: CellGrid, density: float, rng: np.random.Generator,
                   radio: RadioConfig | None = None) -> UserPopulation:
    """Exactly ``round(density * |C|)`` users, uniform over the grid's convex hull.

    The hull is taken over the hexagonal cell footprints. Each user is served
    by the cell it receives most power from. Demand is left unset (unicast);
    see :func:`assign_demand`.
    """
    if not density > 0:
        raise ValueError("density must be positive")
    radio = radio or RadioConfig()
    count = int(round(density * len(grid)))
    pts = _footprint(grid)
    if len(grid) == 1:
        hull_pts = pts
    else:
        hull_pts = pts[ConvexHull(pts).vertices]
    tri = Delaunay(hull_pts)
    lo, hi = hull_pts.min(axis=0), hull_pts.max(axis=0)
    out = np.empty((0, 2))
    while len(out) < count:
        cand = rng.uniform(lo, hi, size=(2 * (count - len(out)) + 16, 2))
        out = np.vstack([out, cand[tri.find_simplex(cand) >= 0]])
    positions = out[:count]
    serving = np.empty(count, dtype=np.int64)
    for s in range(0, count, 4096):
        serving[s:s + 4096] = rx_power_mw(positions[s:s + 4096], grid.centers, radio).argmax(axis=1)
    positions.setflags(write=False)
    serving.setflags(write=False)
    item = np.full(count, UNICAST, dtype=np.int64)
    item.setflags(write=False)
    return UserPopulation(positions, serving, item)


def _bfs_order(adj: dict[int, set[int]]) -> list[int]:
    seen, order = set(), []
    for root in sorted(adj):
        if root in seen:
            continue
        seen.add(root)
        todo = deque([root])
        while todo:
            z = todo.popleft()
            order.append(z)
            for n in sorted(adj[z]):
                if n not in seen:
                    seen.add(n)
                    todo.append(n)
    return order


def build_catalog(zone_adj: dict[int, set[int]], items_per_zone: int = ITEMS_PER_ZONE,
                  neighbor_overlap: int = 12, rates=(500_000,),
                  rng: np.random.Generator | None = None, first_item: int = 0) -> ZoneCatalog:
    """Greedy per-zone catalogs sharing ``neighbor_overlap`` items with each neighbour.

    Zones are filled in BFS order. A zone first borrows items from its already
    filled neighbours until every such neighbour shares at least the requested
    overlap (preferring items that fix the most deficits), then tops up with
    fresh items. Where geometry forces more sharing the overlap exceeds the
    target; achieved overlaps are kept on the catalog.

    Popularity rank: items not shared with any neighbour come first, shared
    items last, each group in random order.
    """
    if not 0 <= neighbor_overlap <= items_per_zone:
        raise ValueError("neighbor_overlap must lie in 0..items_per_zone")
    if items_per_zone < 1:
        raise ValueError("items_per_zone must be positive")
    rng = rng if rng is not None else np.random.default_rng(0)
    rates = list(rates)
    if not rates or any(r <= 0 for r in rates):
        raise ValueError("rates must be a non-empty list of positive bit rates")

    next_item = first_item
    sets: dict[int, list[int]] = {}
    for z in _bfs_order(zone_adj):
        done = [n for n in sorted(zone_adj[z]) if n in sets]
        chosen: list[int] = []
        if done:
            pool = sorted({i for n in done for i in sets[n]})
            pool = [pool[k] for k in rng.permutation(len(pool))]
            while len(chosen) < items_per_zone:
                deficit = [n for n in done
                           if len(set(sets[n]) & set(chosen)) < neighbor_overlap]
                if not deficit:
                    break
                best, best_score = None, 0
                for i in pool:
                    if i in chosen:
                        continue
                    score = sum(i in sets[n] for n in deficit)
                    if score > best_score:
                        best, best_score = i, score
                if best is None:
                    break
                chosen.append(best)
        while len(chosen) < items_per_zone:
            chosen.append(next_item)
            next_item += 1
        sets[z] = chosen

    zones = []
    for z in sorted(sets):
        shared = {i for n in zone_adj[z] for i in sets[n]}
        own = [i for i in sets[z] if i not in shared]
        common = [i for i in sets[z] if i in shared]
        own = [own[k] for k in rng.permutation(len(own))]
        common = [common[k] for k in rng.permutation(len(common))]
        zones.append(tuple(own + common))

    all_items = sorted({i for z in zones for i in z})
    item_rates = {i: int(rates[int(rng.integers(len(rates)))]) for i in all_items}
    overlaps = {(a, b): len(set(zones[a]) & set(zones[b]))
                for a in sorted(zone_adj) for b in sorted(zone_adj[a]) if a < b}
    return ZoneCatalog(tuple(zones), item_rates, overlaps)


def catalog_for_grid(grid: CellGrid, **kwargs) -> ZoneCatalog:
    return build_catalog(zone_adjacency(grid), **kwargs)


def interest_pmf(distribution: str, n_items: int = ITEMS_PER_ZONE,
                 parameter: float = EXP_PARAMETER) -> np.ndarray:
    """Probability of each popularity rank."""
    if distribution == "uniform":
        return np.full(n_items, 1.0 / n_items)
    if distribution == "exponential":
        w = np.exp(-parameter * np.arange(n_items) / n_items)
        return w / w.sum()
    raise ValueError(f"unknown distribution {distribution!r}")


def sample_interest(zone_items, distribution: str, rng: np.random.Generator) -> int:
    """One user's item, drawn from its zone catalog (rank-ordered)."""
    pmf = interest_pmf(distribution, len(zone_items))
    return int(zone_items[rng.choice(len(zone_items), p=pmf)])


def assign_demand(users: UserPopulation, grid: CellGrid, catalog: ZoneCatalog,
                  distribution: str, unicast_fraction: float,
                  rng: np.random.Generator) -> UserPopulation:
    """Mark a random ``unicast_fraction`` of users as unicast, the rest pick one item."""
    if not 0.0 <= unicast_fraction <= 1.0:
        raise ValueError("unicast_fraction must lie in [0, 1]")
    n = len(users)
    n_uni = int(round(unicast_fraction * n))
    uni = np.zeros(n, dtype=bool)
    uni[rng.permutation(n)[:n_uni]] = True
    zones = grid.zone_ids[users.serving]
    item = np.full(n, UNICAST, dtype=np.int64)
    draws = rng.random(n)
    for z, items in enumerate(catalog.zones):
        cdf = np.cumsum(interest_pmf(distribution, len(items)))
        cdf[-1] = 1.0
        sel = (zones == z) & ~uni
        ranks = np.searchsorted(cdf, draws[sel], side="right")
        item[sel] = np.asarray(items)[ranks]
    return users.with_items(item)


def interest_counts(users: UserPopulation, n_cells: int) -> dict[tuple[int, int], int]:
    """w[c, i]: broadcast-interested users per (cell, item)."""
    mask = users.broadcast_mask
    out: dict[tuple[int, int], int] = {}
    for c, i in zip(users.serving[mask].tolist(), users.item[mask].tolist()):
        out[(c, i)] = out.get((c, i), 0) + 1
    return out


def epsilon(item: ContentItem, t0: int, period: int) -> float:
    """Fraction of the window ``[t0, t0 + period)`` during which ``item`` is live."""
    return live_frames(item, t0, period) / period


def live_frames(item: ContentItem, t0: int, period: int) -> int:
    if period <= 0:
        raise ValueError("period must be positive")
    lo = max(t0, item.start_frame)
    hi = min(t0 + period, item.end_frame)
    return max(0, hi - lo)


def generate_timeline(items, horizon: int = 180, duration_range=(10, 30),
                      rng: np.random.Generator | None = None) -> list[ContentItem]:
    """Random start and duration for each item; everything ends by ``horizon``.

    ``items`` is an iterable of ContentItem (rates are kept) or item ids.
    """
    lo, hi = duration_range
    if not 1 <= lo <= hi:
        raise ValueError("bad duration_range")
    if horizon < hi:
        raise ValueError("horizon must be at least the maximum duration")
    rng = rng if rng is not None else np.random.default_rng(0)
    out = []
    for it in items:
        if not isinstance(it, ContentItem):
            it = ContentItem(int(it), 1)
        dur = int(rng.integers(lo, hi + 1))
        start = int(rng.integers(0, horizon - dur + 1))
        out.append(ContentItem(it.id, it.service_rate, start, dur))
    return out


def _round_half_up(x):
    return np.floor(np.asarray(x, dtype=float) + 0.5).astype(np.int64)


def _truncated_noise(w, sigma_sq, bound_frac, rng):
    w = np.asarray(w, dtype=float)
    sigma = np.sqrt(np.maximum(np.asarray(sigma_sq, dtype=float), 0.0)) * np.ones_like(w)
    bound = bound_frac * w
    noise = np.zeros_like(w)
    live = (sigma > 0) & (bound > 0)
    if np.any(live):
        s, b = sigma[live], bound[live]
        noise[live] = truncnorm.rvs(-b / s, b / s, loc=0.0, scale=s, random_state=rng)
    return noise


def estimate_interest(actual_w, t_s, sigma0_sq, rng: np.random.Generator):
    """Planner-side estimate: ``w + nu``, nu ~ N(0, sigma0^2 t_s) truncated to [-w, w].

    ``sigma0_sq`` is a scalar or one value per entry of ``actual_w``.
    """
    t_s = np.asarray(t_s)
    if np.any(t_s < 0):
        raise ValueError("t_s must be non-negative")
    w = np.asarray(actual_w)
    out = np.maximum(_round_half_up(w + _truncated_noise(w, sigma0_sq * t_s, 1.0, rng)), 0)
    return int(out) if out.ndim == 0 else out


def churn_interest(actual_w, t_d, sigma0_sq, rng: np.random.Generator):
    """In-flight count: ``w + nu``, nu ~ N(0, sigma0^2 t_d) truncated to [-0.3w, 0.3w]."""
    t_d = np.asarray(t_d)
    if np.any(t_d < 0):
        raise ValueError("t_d must be non-negative")
    w = np.asarray(actual_w)
    out = np.maximum(_round_half_up(w + _truncated_noise(w, sigma0_sq * t_d, 0.3, rng)), 0)
    return int(out) if out.ndim == 0 else out
