"""A synchronization area ready for planning: grid, radio, catalog, users."""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

from . import demand
from .demand import UNICAST, ContentItem, UserPopulation, ZoneCatalog
from .radio import RadioConfig, bits_from_sinr, rx_power_mw, sinr_db_from_powers
from .topology import CellGrid, assign_zones, build_hex_grid, zone_adjacency


def stream(seed: int, name: str) -> np.random.Generator:
    """Named RNG sub-stream: entropy ``[seed, crc32(name)]`` fed to SeedSequence."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(name.encode())]))


@dataclass
class Scenario:
    grid: CellGrid
    radio: RadioConfig
    catalog: ZoneCatalog
    users: UserPopulation
    items: dict[int, ContentItem]
    _bsinr: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        n = len(self.users)
        total = np.zeros(n)
        own = np.zeros(n)
        for s in range(0, n, 2048):
            p = rx_power_mw(self.users.positions[s:s + 2048], self.grid.centers, self.radio)
            total[s:s + 2048] = p.sum(axis=1)
            own[s:s + 2048] = p[np.arange(len(p)), self.users.serving[s:s + 2048]]
        self.rx_total = total
        self.unicast_sinr = sinr_db_from_powers(own, total, self.radio) if n else np.zeros(0)
        self.unicast_bits = np.asarray(bits_from_sinr(self.unicast_sinr, self.radio), dtype=np.int64)
        by_ci: dict[tuple[int, int], list[int]] = {}
        uni: dict[int, list[int]] = {}
        for j, (c, i) in enumerate(zip(self.users.serving.tolist(), self.users.item.tolist())):
            if i == UNICAST:
                uni.setdefault(c, []).append(j)
            else:
                by_ci.setdefault((c, i), []).append(j)
        self.users_by_cell_item = {k: np.array(v, dtype=np.int64) for k, v in by_ci.items()}
        self.unicast_by_cell = {k: np.array(v, dtype=np.int64) for k, v in uni.items()}
        self.items_by_cell: dict[int, list[int]] = {}
        for c, i in sorted(by_ci):
            self.items_by_cell.setdefault(c, []).append(i)

    @property
    def n_cells(self) -> int:
        return len(self.grid)

    def rate(self, item: int) -> int:
        return self.items[item].service_rate

    def broadcast_users(self, cells, item) -> np.ndarray:
        parts = [self.users_by_cell_item[(c, item)] for c in sorted(cells)
                 if (c, item) in self.users_by_cell_item]
        return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)

    def broadcast_sinr(self, cells: frozenset, item: int) -> tuple[np.ndarray, np.ndarray]:
        """(user ids, MBSFN-combined SINR dB) for users of ``item`` inside ``cells``."""
        key = (cells, item)
        hit = self._bsinr.get(key)
        if hit is None:
            ids = self.broadcast_users(cells, item)
            if len(ids):
                area = sorted(cells)
                p = rx_power_mw(self.users.positions[ids], self.grid.centers[area], self.radio)
                sinr = sinr_db_from_powers(p.sum(axis=1), self.rx_total[ids], self.radio)
            else:
                sinr = np.zeros(0)
            bits = np.asarray(bits_from_sinr(sinr, self.radio), dtype=np.int64)
            hit = (ids, sinr, bits)
            if len(self._bsinr) > 200_000:
                self._bsinr.clear()
            self._bsinr[key] = hit
        return hit[0], hit[1]

    def broadcast_bits(self, cells: frozenset, item: int) -> tuple[np.ndarray, np.ndarray]:
        self.broadcast_sinr(cells, item)
        ids, _, bits = self._bsinr[(cells, item)]
        return ids, bits


@dataclass(frozen=True)
class ScenarioSpec:
    cells: int = 57
    zones: int = 4
    distribution: str = "exponential"
    rates: tuple[int, ...] = (500_000,)
    unicast_fraction: float = 0.25
    density: float = 60.0
    items_per_zone: int = 16
    neighbor_overlap: int = 12
    mixed_rates: bool = False
    inter_site_distance: float = 500.0
    radio: RadioConfig = RadioConfig()


def build_scenario(spec: ScenarioSpec, seed: int) -> Scenario:
    grid = assign_zones(build_hex_grid(spec.cells, spec.inter_site_distance), spec.zones)
    if spec.mixed_rates:
        catalog = mixed_rate_catalog(grid, stream(seed, "catalog"), spec.neighbor_overlap)
    else:
        catalog = demand.build_catalog(zone_adjacency(grid), spec.items_per_zone,
                                       spec.neighbor_overlap, spec.rates, stream(seed, "catalog"))
    users = demand.generate_users(grid, spec.density, stream(seed, "users"), spec.radio)
    users = demand.assign_demand(users, grid, catalog, spec.distribution,
                                 spec.unicast_fraction, stream(seed, "interests"))
    items = {i: ContentItem(i, r) for i, r in catalog.rates.items()}
    return Scenario(grid, spec.radio, catalog, users, items)


LIVE_EVENT_RATE = 2_000_000
ZONE_ITEM_RATE = 1_000_000
SMALL_RATE_RANGE = (192_000, 500_000)


def mixed_rate_catalog(grid: CellGrid, rng: np.random.Generator,
                       neighbor_overlap: int = 12) -> ZoneCatalog:
    """Item 0 is a 2 Mb/s live event in every zone; each zone adds its own 1 Mb/s
    item (rank 1) and 14 small items with rates drawn from [192, 500] kb/s."""
    adj = zone_adjacency(grid)
    n_zones = grid.zone_count
    small = demand.build_catalog(adj, 14, max(0, min(14, neighbor_overlap - 1)), (1,), rng,
                                 first_item=1 + n_zones)
    rates = {0: LIVE_EVENT_RATE}
    zones = []
    for z in range(n_zones):
        rates[1 + z] = ZONE_ITEM_RATE
        zones.append((0, 1 + z) + small.zones[z])
    lo, hi = SMALL_RATE_RANGE
    for i in small.item_ids:
        rates[i] = int(rng.integers(lo, hi + 1))
    overlaps = {k: v + 1 for k, v in small.overlaps.items()}
    return ZoneCatalog(tuple(zones), rates, overlaps)
