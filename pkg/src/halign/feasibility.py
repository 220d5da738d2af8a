"""Explicit constraints of the outer problem and corridor containment."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence


from .geometry import (
    Alignment,
    GeometryError,
    NoCrossingError,
    Path,
    build_path,
    leg_margins,
    path_station_parameter,
    tangent_lengths,
)
from .terrain import Box, Corridor


@dataclass(frozen=True)
class Crossing:
    station: int
    t: float | None        # None when the path never reaches the station line
    chainage: float | None

    @property
    def inside(self) -> bool:
        return self.t is not None and 0.0 <= self.t <= 1.0


@dataclass
class FeasibilityReport:
    continuity_margins: list[float]           # one per leg
    radius_margins: list[float]               # one per interior point
    box_violations: list[tuple[float, float]]  # (x, y) distance outside each box
    containment: list[Crossing]
    build_error: str | None = None
    path: Path | None = field(default=None, repr=False)

    @property
    def feasible(self) -> bool:
        return (
            self.build_error is None
            and all(m >= 0 for m in self.continuity_margins)
            and all(m >= 0 for m in self.radius_margins)
            and all(vx == 0 and vy == 0 for vx, vy in self.box_violations)
            and len(self.containment) > 0
            and all(c.inside for c in self.containment)
        )

    @property
    def reasons(self) -> list[str]:
        out = []
        if any(m < 0 for m in self.radius_margins):
            out.append("radius")
        if any(vx > 0 or vy > 0 for vx, vy in self.box_violations):
            out.append("box")
        if any(m < 0 for m in self.continuity_margins):
            out.append("continuity")
        if self.build_error is not None and "continuity" not in out:
            out.append("geometry")
        if self.containment and not all(c.inside for c in self.containment):
            out.append("containment")
        return out

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "reasons": self.reasons,
            "continuity_margins": self.continuity_margins,
            "radius_margins": self.radius_margins,
            "box_violations": [list(v) for v in self.box_violations],
            "containment": [
                {"station": c.station, "t": c.t, "chainage": c.chainage, "inside": c.inside}
                for c in self.containment
            ],
            "build_error": self.build_error,
        }


def check_continuity(alignment: Alignment) -> list[float]:
    """Per-leg slack: leg length minus the tangent lengths at both of its ends.

    A vertex whose tangent length cannot be computed poisons its two legs
    with ``-inf``.
    """
    n = alignment.n
    lts: list[float] = [0.0] * n
    bad: set[int] = set()
    for i in range(1, n - 1):
        sub = Alignment(alignment.points[i - 1 : i + 2], (0.0, alignment.radii[i], 0.0))
        try:
            lts[i] = tangent_lengths(sub)[1]
        except GeometryError:
            bad.add(i)
    margins = leg_margins(alignment, lts)
    for i in bad:
        margins[i - 1] = -math.inf
        margins[i] = -math.inf
    return margins


def check_radius(alignment: Alignment, r_min: float) -> list[float]:
    return [r - r_min for r in alignment.radii[1:-1]]


def check_boxes(alignment: Alignment, boxes: Sequence[Box]) -> list[tuple[float, float]]:
    if len(boxes) != alignment.n - 2:
        raise ValueError(f"{len(boxes)} boxes for {alignment.n - 2} interior points")
    out = []
    for (x, y), b in zip(alignment.points[1:-1], boxes):
        out.append((max(0.0, b.lo[0] - x, x - b.hi[0]), max(0.0, b.lo[1] - y, y - b.hi[1])))
    return out


def check_containment(path: Path, corridor: Corridor) -> list[Crossing]:
    """Cross-section parameter of the path at every station, in station order."""
    out = []
    prev = -math.inf
    for st in corridor.stations:
        if prev is None:
            out.append(Crossing(st.index, None, None))
            continue
        try:
            t, ch = path_station_parameter(path, st, prev)
        except NoCrossingError:
            out.append(Crossing(st.index, None, None))
            prev = None
            continue
        out.append(Crossing(st.index, t, ch))
        prev = ch
    return out


def assess(alignment: Alignment, corridor: Corridor) -> FeasibilityReport:
    """Run every check; the path is built only when it is well defined."""
    report = FeasibilityReport(
        continuity_margins=check_continuity(alignment),
        radius_margins=check_radius(alignment, corridor.r_min),
        box_violations=check_boxes(alignment, corridor.boxes),
        containment=[],
    )
    try:
        path = build_path(alignment)
    except GeometryError as exc:
        report.build_error = str(exc)
        return report
    report.path = path
    report.containment = check_containment(path, corridor)
    return report
