"""Shared builders for hand-made scenarios and a cached 57-cell scenario."""

import numpy as np
import pytest

from embms.demand import UNICAST, ContentItem, UserPopulation, ZoneCatalog
from embms.radio import RadioConfig, rx_power_mw
from embms.scenario import Scenario, ScenarioSpec, build_scenario
from embms.topology import assign_zones, build_hex_grid


def make_scenario(n_cells, positions, items, rates, zones=1, radio=None):
    """Scenario with users at ``positions`` wanting ``items`` (UNICAST for -1).

    ``rates`` maps item id to bit/s. Users are served by their strongest cell.
    """
    radio = radio or RadioConfig()
    grid = assign_zones(build_hex_grid(n_cells), zones)
    pos = np.asarray(positions, dtype=float).reshape(-1, 2)
    if len(pos):
        serving = rx_power_mw(pos, grid.centers, radio).argmax(axis=1).astype(np.int64)
    else:
        serving = np.zeros(0, dtype=np.int64)
    users = UserPopulation(pos, serving, np.asarray(items, dtype=np.int64).reshape(-1))
    cat = ZoneCatalog(tuple(tuple(sorted(rates)) for _ in range(zones)), dict(rates))
    return Scenario(grid, radio, cat, users, {i: ContentItem(i, r) for i, r in rates.items()})


def near(grid, c, offset=(0.0, 0.0)):
    x, y = grid.cells[c].center
    return (x + offset[0], y + offset[1])


def tiny_scenario(seed, cells=7, items=2, rate=500_000, unicast_per_cell=2, counts=(0, 0, 1, 2, 3, 6)):
    """Random small instance with patchy interest, so each item splits into several areas.

    Per (cell, item) the number of interested users is drawn from ``counts``;
    users sit uniformly within 250 m of their cell centre.
    """
    rng = np.random.default_rng(seed)
    grid = build_hex_grid(cells)
    cell, item = [], []
    for c in range(cells):
        for i in range(items):
            k = int(counts[int(rng.integers(len(counts)))])
            cell += [c] * k
            item += [i] * k
        cell += [c] * unicast_per_cell
        item += [UNICAST] * unicast_per_cell
    cell = np.array(cell, dtype=int)
    r = 250 * np.sqrt(rng.random(len(cell)))
    a = rng.uniform(0, 2 * np.pi, len(cell))
    pos = grid.centers[cell] + np.stack([r * np.cos(a), r * np.sin(a)], axis=1)
    return make_scenario(cells, pos, item, {i: rate for i in range(items)})


@pytest.fixture(scope="session")
def scenario57():
    return build_scenario(ScenarioSpec(), 1)


def tiny_instances(count=50, rate=1_000_000, max_candidates=10):
    """The first ``count`` seeded 7-cell, 2-item instances with at most ``max_candidates``
    cell-aggregation candidates."""
    from embms.areas import Evaluator
    from embms.planners import cell_aggregation

    out = []
    seed = 0
    while len(out) < count:
        sc = tiny_scenario(seed, cells=7, items=2, rate=rate)
        ev = Evaluator(sc)
        if len(cell_aggregation(sc.grid, ev.interest_map(), tau=2)) <= max_candidates:
            out.append((seed, sc))
        seed += 1
    return out


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
