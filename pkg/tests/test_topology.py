import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from embms.topology import (assign_zones, build_hex_grid, dilate, is_connected, neighbors,
                            zone_adjacency)


def distance_pairs(grid):
    """Brute-force adjacency: every pair whose centres are one ISD apart."""
    c = grid.centers
    isd = grid.inter_site_distance
    out = set()
    for a in range(len(c)):
        for b in range(a + 1, len(c)):
            d = float(np.hypot(*(c[a] - c[b])))
            if abs(d - isd) <= 1e-6 * isd:
                out.add((a, b))
    return out


def test_single_cell():
    g = build_hex_grid(1, 500)
    assert len(g) == 1
    assert g.adjacent_pairs() == []


def test_seven_cells_one_ring():
    g = build_hex_grid(7, 500)
    degrees = sorted(len(neighbors(g, c)) for c in range(7))
    assert degrees == [3] * 6 + [6]
    assert neighbors(g, 0) == frozenset(range(1, 7))
    for c in range(1, 7):
        assert len(neighbors(g, c)) == 3


@pytest.mark.parametrize("n, pairs", [(7, 12), (19, 42), (57, 144), (597, 1705)])
def test_adjacency_matches_distance_scan(n, pairs):
    g = build_hex_grid(n, 500)
    oracle = distance_pairs(g)
    assert len(oracle) == pairs
    assert set(g.adjacent_pairs()) == oracle
    assert is_connected(g, range(n))


def test_neighbors_57_match_distance():
    g = build_hex_grid(57, 500)
    oracle = distance_pairs(g)
    for c in range(57):
        expect = {b for a, b in oracle if a == c} | {a for a, b in oracle if b == c}
        assert neighbors(g, c) == expect
        assert c not in neighbors(g, c)


def test_neighbors_unknown_cell():
    with pytest.raises(KeyError):
        neighbors(build_hex_grid(7), 7)


def test_bad_inputs():
    with pytest.raises(ValueError):
        build_hex_grid(0)
    with pytest.raises(ValueError):
        build_hex_grid(7, -1)
    with pytest.raises(ValueError):
        assign_zones(build_hex_grid(7), 8)


def _zones_ok(g, k):
    z = g.zone_ids
    assert set(z.tolist()) == set(range(k))
    for zone in range(k):
        assert is_connected(g, np.flatnonzero(z == zone).tolist())


def test_zones_57_4():
    g = assign_zones(build_hex_grid(57), 4)
    assert sorted(np.bincount(g.zone_ids).tolist(), reverse=True) == [15, 14, 14, 14]
    _zones_ok(g, 4)


def test_zones_single():
    g = assign_zones(build_hex_grid(57), 1)
    assert (g.zone_ids == 0).all()


@pytest.mark.parametrize("k", [10, 40, 160])
def test_zones_597(k):
    g = assign_zones(build_hex_grid(597), k)
    _zones_ok(g, k)
    sizes = np.bincount(g.zone_ids)
    assert sizes.max() - sizes.min() <= 1


def test_zone_adjacency_symmetric():
    g = assign_zones(build_hex_grid(57), 4)
    adj = zone_adjacency(g)
    for a, ns in adj.items():
        assert a not in ns
        for b in ns:
            assert a in adj[b]


def test_dilate():
    g = build_hex_grid(7)
    assert dilate(g, [0]) == set(range(7))


def test_determinism():
    a = assign_zones(build_hex_grid(57), 4).to_text()
    b = assign_zones(build_hex_grid(57), 4).to_text()
    assert a == b


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 120), st.integers(1, 12))
def test_grid_properties(n, k):
    g = build_hex_grid(n, 500)
    assert len(g) == n
    assert [c.id for c in g.cells] == list(range(n))
    assert is_connected(g, range(n))
    for a in range(n):
        assert a not in g.adjacency[a]
        if n > 1:
            assert 1 <= len(g.adjacency[a]) <= 6
        for b in g.adjacency[a]:
            assert a in g.adjacency[b]
    if k <= n:
        z = assign_zones(g, k)
        _zones_ok(z, k)
