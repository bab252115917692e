import numpy as np
import pytest
from hypothesis import given, strategies as st
from shapely.geometry import LineString, Point

from ctdsim.geometry import count_crossings, segments_intersect
from ctdsim.mobility import Zone, ZoneKind, unique_walls, walls_between


def _geom(p, q):
    # shapely treats a zero-length LineString as empty
    return LineString([p, q]) if tuple(p) != tuple(q) else Point(p)


def shapely_crossings(a, b, walls):
    seg = _geom(tuple(a), tuple(b))
    return sum(seg.intersects(_geom((w[0], w[1]), (w[2], w[3]))) for w in walls)


def test_examples():
    assert segments_intersect((0, 0), (2, 2), (0, 2), (2, 0))
    assert not segments_intersect((0, 0), (1, 0), (0, 1), (1, 1))
    assert segments_intersect((0, 0), (1, 0), (1, 0), (1, 5))  # endpoint touch
    assert segments_intersect((0, 0), (3, 0), (1, 0), (2, 0))  # collinear overlap
    assert not segments_intersect((0, 0), (1, 0), (2, 0), (3, 0))  # collinear, disjoint


def test_same_zone_no_walls():
    z = Zone("w", ZoneKind.WORK, (0, 0, 10, 10))
    assert walls_between((1, 1), (9, 8), [z]) == 0


def test_side_by_side_zones():
    a = Zone("a", ZoneKind.WORK, (0, 0, 5, 5))
    b = Zone("b", ZoneKind.WORK, (5, 0, 10, 5))
    assert unique_walls([a, b]).shape == (7, 4)  # shared wall stored once
    assert walls_between((4.5, 2), (5.5, 2), [a, b]) == 1
    assert shapely_crossings((4.5, 2), (5.5, 2), unique_walls([a, b])) == 1
    assert walls_between((-1, 2), (11, 2), [a, b]) == 3


def test_grazing_counts():
    z = Zone("a", ZoneKind.WORK, (0, 0, 5, 5))
    # runs along the bottom wall and touches both side walls at their ends
    assert walls_between((1, 0), (4, 0), [z]) == 1
    assert walls_between((-1, 0), (6, 0), [z]) == 3


def test_unwalled_zone():
    z = Zone("a", ZoneKind.OTHER, (0, 0, 5, 5), walled=False)
    assert walls_between((-1, 2), (6, 2), [z]) == 0


coords = st.floats(-10, 10, allow_nan=False).map(lambda v: round(v, 1))
points = st.tuples(coords, coords)


@given(st.lists(st.tuples(points, points), min_size=1, max_size=30),
       st.lists(st.tuples(coords, coords, coords, coords), min_size=1, max_size=12))
def test_matches_shapely(segments, walls):
    # one-decimal grid coordinates make collinear and touching cases common
    a = np.array([s[0] for s in segments], dtype=float)
    b = np.array([s[1] for s in segments], dtype=float)
    w = np.array(walls, dtype=float)
    got = count_crossings(a, b, w)
    expected = [shapely_crossings(tuple(x), tuple(y), w) for x, y in zip(a, b)]
    assert got.tolist() == expected


def test_blocking_is_transparent(monkeypatch):
    import ctdsim.geometry as g
    rng = np.random.default_rng(0)
    a, b = rng.uniform(0, 20, (400, 2)), rng.uniform(0, 20, (400, 2))
    walls = rng.uniform(0, 20, (30, 4))
    full = count_crossings(a, b, walls)
    monkeypatch.setattr(g, "_BLOCK_CELLS", 64)
    assert count_crossings(a, b, walls).tolist() == full.tolist()


def test_empty_inputs():
    assert count_crossings(np.zeros((0, 2)), np.zeros((0, 2)), np.zeros((3, 4))).shape == (0,)
    assert count_crossings(np.zeros((2, 2)), np.ones((2, 2)), np.zeros((0, 4))).tolist() == [0, 0]


@pytest.mark.parametrize("bounds", [(0, 0, 0, 1), (0, 0, 1, 0), (2, 0, 1, 1)])
def test_zone_needs_area(bounds):
    from ctdsim.mobility import ConfigError
    with pytest.raises(ConfigError):
        Zone("bad", ZoneKind.WORK, bounds)
