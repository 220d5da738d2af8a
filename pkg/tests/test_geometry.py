import math

import numpy as np
import pytest
from factories import random_alignment
from hypothesis import assume, given
from hypothesis import strategies as st

from halign.geometry import (
    Alignment,
    Arc,
    CoincidentPointsError,
    DegenerateTurnError,
    GeometryError,
    Segment,
    TangentOverrunError,
    bisector_foot,
    build_path,
    curve_center,
    leg_margins,
    path_station_parameter,
    tangent_length,
    tangent_lengths,
    tangent_points,
    turn_angle,
)
from halign.terrain import GroundSample, Station

coord = st.floats(-50, 50, allow_nan=False)
point = st.tuples(coord, coord)


def test_right_angle_worked_example():
    P0, P, P1 = (0, 0), (1, 0), (1, 1)
    assert turn_angle(P0, P, P1) == pytest.approx(math.pi / 2, abs=1e-15)
    assert tangent_length(0.2, math.pi / 2) == pytest.approx(0.2, abs=1e-15)
    E, F = tangent_points(P0, P, P1, 0.2)
    np.testing.assert_allclose(E, (0.8, 0.0), atol=1e-12)
    np.testing.assert_allclose(F, (1.0, 0.2), atol=1e-12)
    np.testing.assert_allclose(curve_center(P0, P, P1, 0.2), (0.8, 0.2), atol=1e-12)
    # the bisector of the right angle meets the hypotenuse at its midpoint
    np.testing.assert_allclose(bisector_foot(P0, P, P1), (0.5, 0.5), atol=1e-12)


def test_worked_path_pieces():
    path = build_path(Alignment.from_interior([(0, 0), (1, 0), (1, 1)], [0.2]))
    kinds = [type(p) for p in path.pieces]
    assert kinds == [Segment, Arc, Segment]
    arc = path.pieces[1]
    assert arc.sweep == pytest.approx(math.pi / 2)   # left turn is counter-clockwise
    assert arc.index == 1
    assert path.total_length == pytest.approx(1.6 + 0.1 * math.pi, abs=1e-12)


def test_right_turn_has_negative_sweep():
    path = build_path(Alignment.from_interior([(0, 0), (1, 0), (1, -1)], [0.2]))
    assert path.pieces[1].sweep == pytest.approx(-math.pi / 2)
    np.testing.assert_allclose(path.pieces[1].center, (0.8, -0.2), atol=1e-12)


@given(point, point, point, st.floats(0.01, 0.99))
def test_center_equidistant_and_perpendicular(p0, p, p1, frac):
    P0, P, P1 = map(np.asarray, (p0, p, p1))
    lu, lv = np.linalg.norm(P0 - P), np.linalg.norm(P1 - P)
    assume(min(lu, lv, np.linalg.norm(P1 - P0)) > 0.5)
    theta = turn_angle(P0, P, P1)
    assume(0.05 < theta < math.pi - 0.05)
    r = frac * min(lu, lv) * math.tan(theta / 2)
    E, F = tangent_points(P0, P, P1, r)
    C = curve_center(P0, P, P1, r)
    assert abs(np.linalg.norm(C - E) - r) < 1e-9
    assert abs(np.linalg.norm(C - F) - r) < 1e-9
    assert abs((C - E) @ (P0 - P)) / lu < 1e-9
    assert abs((C - F) @ (P1 - P)) / lv < 1e-9
    assert abs(np.linalg.norm(E - P) - np.linalg.norm(F - P)) < 1e-9


@given(point, point, point)
def test_bisector_ratio(p0, p, p1):
    P0, P, P1 = map(np.asarray, (p0, p, p1))
    U, V = P0 - P, P1 - P
    assume(min(np.linalg.norm(U), np.linalg.norm(V)) > 0.5)
    assume(abs(U[0] * V[1] - U[1] * V[0]) > 0.1 * np.linalg.norm(U) * np.linalg.norm(V))
    Q = bisector_foot(P0, P, P1)
    # Q lies on the opposite side and splits it in the ratio |U| : |V|
    W = P1 - P0
    assert abs((Q - P0)[0] * W[1] - (Q - P0)[1] * W[0]) / np.linalg.norm(W) < 1e-9
    lhs = np.linalg.norm(Q - P0) * np.linalg.norm(V)
    rhs = np.linalg.norm(P1 - Q) * np.linalg.norm(U)
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, lhs)


def test_straight_through_and_zero_radius():
    assert tangent_length(5.0, math.pi) == 0.0
    assert tangent_length(0.0, 1.0) == 0.0
    C = curve_center((0, 0), (1, 0), (1, 1), 0.0)
    np.testing.assert_array_equal(C, (1.0, 0.0))
    path = build_path(Alignment.from_interior([(0, 0), (1, 0), (2, 0)], [3.0]))
    assert all(isinstance(p, Segment) for p in path.pieces)
    assert path.total_length == pytest.approx(2.0)


def test_error_cases():
    with pytest.raises(CoincidentPointsError):
        turn_angle((0, 0), (0, 0), (1, 1))
    with pytest.raises(DegenerateTurnError):
        tangent_length(1.0, 1e-4)
    with pytest.raises(GeometryError):
        tangent_length(-1.0, 1.0)
    with pytest.raises(TangentOverrunError):
        tangent_points((0, 0), (1, 0), (1, 1), 5.0)
    with pytest.raises(DegenerateTurnError):
        bisector_foot((0, 0), (1, 0), (2, 0))
    with pytest.raises(ValueError):
        Alignment(((0, 0), (1, 0)), (1.0, 0.0))
    with pytest.raises(CoincidentPointsError):
        Alignment(((0, 0), (0, 0), (1, 0)), (0.0, 0.0, 0.0))


def test_hairpin_index_is_reported():
    a = Alignment.from_interior([(0, 0), (10, 0), (0, 1e-4)], [1.0])
    with pytest.raises(DegenerateTurnError) as info:
        tangent_lengths(a)
    assert info.value.index == 1


def test_overrun_blames_the_larger_arc():
    a = Alignment.from_interior([(0, 0), (1, 0), (1, 1), (2, 1)], [0.3, 0.9])
    assert leg_margins(a, tangent_lengths(a))[1] < 0
    with pytest.raises(TangentOverrunError) as info:
        build_path(a)
    assert info.value.index == 2


@given(st.integers(0, 10_000))
def test_path_is_g1_and_chainage_additive(seed):
    a = random_alignment(np.random.default_rng(seed))
    path = build_path(a)
    assert path.pieces[0].start_chainage == 0.0
    np.testing.assert_allclose(path.pieces[0].start, a.points[0], atol=1e-12)
    np.testing.assert_allclose(path.pieces[-1].end_point, a.points[-1], atol=1e-9)
    for p, q in zip(path.pieces, path.pieces[1:]):
        assert np.linalg.norm(p.end_point - q.start) < 1e-9
        assert np.linalg.norm(p.direction_at(p.length) - q.direction_at(0.0)) < 1e-9
        assert q.start_chainage == pytest.approx(p.start_chainage + p.length, abs=1e-12)
    # rounding corners never lengthens the route
    assert path.total_length <= a.polyline_length() + 1e-9


def test_point_at_follows_pieces():
    path = build_path(Alignment.from_interior([(0, 0), (1, 0), (1, 1)], [0.2]))
    np.testing.assert_allclose(path.point_at(0.4), (0.4, 0.0), atol=1e-12)
    mid_arc = 0.8 + 0.05 * math.pi
    c = np.array([0.8, 0.2])
    np.testing.assert_allclose(np.linalg.norm(path.point_at(mid_arc) - c), 0.2, atol=1e-12)
    np.testing.assert_allclose(path.point_at(path.total_length + 5), (1.0, 1.0), atol=1e-12)
    # straight pieces contribute their ends only; arcs are subdivided
    steps = np.linalg.norm(np.diff(path.sample(0.01), axis=0), axis=1)
    assert steps[0] == pytest.approx(0.8) and steps[-1] == pytest.approx(0.8)
    assert np.all(steps[1:-1] < 0.011)


def _station(x, half=1.0, idx=0):
    samples = (GroundSample(-half, 0.0), GroundSample(0.0, 0.0), GroundSample(half, 0.0))
    return Station(idx, (x, 0.0), (x, half), (x, -half), samples)


def test_station_crossing_on_segment_and_arc():
    path = build_path(Alignment.from_interior([(0, 0), (1, 0), (1, 1)], [0.2]))
    # left end is +y, so y = 0 sits halfway
    t, ch = path_station_parameter(path, _station(0.5))
    assert (t, ch) == (pytest.approx(0.5), pytest.approx(0.5))
    # x = 0.9 is crossed on the arc
    t, ch = path_station_parameter(path, _station(0.9))
    y = 0.2 - math.sqrt(0.2**2 - 0.1**2)
    assert t == pytest.approx((1 - y) / 2, abs=1e-12)
    assert 0.8 < ch < 0.8 + 0.1 * math.pi


def test_crossings_chain_forward():
    # the route goes out along y = 0 and comes back along y = 2
    path = build_path(Alignment.from_interior([(0, 0), (10, 0), (10, 2), (0, 2)], [0.5, 0.5]))
    st = _station(5.0, half=3.0)
    t1, ch1 = path_station_parameter(path, st)
    t2, ch2 = path_station_parameter(path, st, ch1)
    assert ch2 > ch1
    assert t1 == pytest.approx(0.5) and t2 == pytest.approx((3 - 2) / 6)
