import math

import numpy as np
import pytest
from factories import random_alignment
from hypothesis import given
from hypothesis import strategies as st

from halign.bilevel import baseline_alignment
from halign.feasibility import (
    assess,
    check_boxes,
    check_containment,
    check_continuity,
    check_radius,
)
from halign.geometry import Alignment, TangentOverrunError, build_path
from halign.synth import SynthSpec, synth_corridor
from halign.terrain import Box


def test_zero_radii_margins_are_leg_lengths():
    pts = [(0, 0), (3, 4), (3, 10), (9, 2)]
    a = Alignment.from_interior(pts, [0.0, 0.0])
    assert check_continuity(a) == pytest.approx([5.0, 6.0, 10.0])


def test_right_angle_margins():
    a = Alignment.from_interior([(0, 0), (1, 0), (1, 1)], [0.2])
    assert check_continuity(a) == pytest.approx([0.8, 0.8])


@given(st.integers(0, 5000), st.floats(1.5, 20))
def test_inflated_radii_fail_in_both_places(seed, factor):
    a = random_alignment(np.random.default_rng(seed))
    assert min(check_continuity(a)) >= 0
    big = Alignment(a.points, tuple(r * factor * 3 for r in a.radii))
    margins = check_continuity(big)
    if min(margins) < 0:
        with pytest.raises(Exception):
            build_path(big)
    else:
        build_path(big)


def test_overlap_is_seen_by_margin_and_builder():
    a = Alignment.from_interior([(0, 0), (1, 0), (1, 1), (2, 1)], [0.8, 0.8])
    assert check_continuity(a)[1] == pytest.approx(1 - 0.8 - 0.8)
    with pytest.raises(TangentOverrunError):
        build_path(a)


def test_degenerate_turn_gives_minus_infinity():
    a = Alignment.from_interior([(0, 0), (10, 0), (0, 1e-4), (5, 5)], [1.0, 0.0])
    m = check_continuity(a)
    assert m[0] == -math.inf and m[1] == -math.inf and m[2] > 0


def test_radius_margins():
    a = Alignment.from_interior([(0, 0), (1, 0), (1, 1), (2, 1)], [5.0, 0.0])
    assert check_radius(a, 5.0) == [0.0, -5.0]


def test_box_violations():
    a = Alignment.from_interior([(0, 0), (1, 1), (4, 2), (5, 5)], [0.0, 0.0])
    boxes = [Box((0, 0), (1, 1)), Box((0, 0), (3, 3))]
    assert check_boxes(a, boxes) == [(0.0, 0.0), (1.0, 0.0)]
    with pytest.raises(ValueError):
        check_boxes(a, boxes[:1])


def test_symmetric_baseline_is_centred():
    c = synth_corridor(SynthSpec(family="valley"))
    rep = assess(baseline_alignment(c), c)
    assert rep.feasible and rep.reasons == []
    assert [x.t for x in rep.containment] == pytest.approx([0.5] * c.n_stations, abs=1e-12)


def test_left_edge_and_exit():
    c = synth_corridor(SynthSpec(family="flat", stations=6, intersection_points=2, half_width=10))
    edge = Alignment.from_interior([c.start, (5.0, 10.0), (45.0, 10.0), c.end], [5.0, 5.0])
    rep = assess(edge, c)
    assert rep.feasible
    # the left edge is +y and maps to t = 0
    touched = [x.t for x in rep.containment if abs(x.t) < 1e-9]
    assert touched
    out = Alignment.from_interior([c.start, (5.0, 14.0), (45.0, 10.0), c.end], [5.0, 5.0])
    rep = assess(out, c)
    assert not rep.feasible and "containment" in rep.reasons and "box" in rep.reasons


def test_missing_crossing_marks_the_rest():
    c = synth_corridor(SynthSpec(family="flat", stations=6, intersection_points=1))
    short = Alignment.from_interior([c.start, (20.0, 0.0), (22.0, 0.0)], [5.0])
    crossings = check_containment(build_path(short), c)
    assert crossings[-1].t is None and not crossings[-1].inside
    assert crossings[0].inside


def test_feasible_chainages_increase():
    c = synth_corridor(SynthSpec(family="ridge"))
    rep = assess(baseline_alignment(c), c)
    ch = [x.chainage for x in rep.containment]
    assert all(b > a for a, b in zip(ch, ch[1:]))


def test_report_to_dict():
    c = synth_corridor(SynthSpec(family="flat", stations=4, intersection_points=1))
    d = assess(baseline_alignment(c), c).to_dict()
    assert d["feasible"] is True and len(d["containment"]) == 4
    assert set(d) >= {"continuity_margins", "radius_margins", "box_violations", "reasons"}
