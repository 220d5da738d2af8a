"""Synthetic corridors with known structure, for testing and benchmarks.

All families share a straight baseline along +x with cross-sections
parallel to the y axis.  Offsets are negative to the left of travel (+y).
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .terrain import Box, Corridor, GroundSample, Station
from .valign import Pit, VAlignConfig

FAMILIES = ("flat", "tilted-plane", "valley", "ridge")


@dataclass(frozen=True)
class SynthSpec:
    family: str = "valley"
    stations: int = 20
    spacing: float = 10.0
    half_width: float = 10.0
    t_star: float = 0.5
    depth: float = 8.0
    intersection_points: int = 3
    seed: int = 0
    samples_per_side: int = 8
    r_min: float = 5.0
    base_elev: float = 100.0
    along_slope: float = 0.02    # tilted-plane only
    cross_slope: float = 0.05    # tilted-plane only
    roughness: float = 0.9       # relative amplitude of the along-road variation
    lead: float | None = None    # run-in before the first and after the last station; default spacing

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")
        if self.stations < 2:
            raise ValueError("station count must be >= 2")
        if not self.spacing > 0 or not self.half_width > 0:
            raise ValueError("spacing and half width must be positive")
        if not 0 <= self.t_star <= 1:
            raise ValueError("t_star must lie in [0, 1]")
        if self.intersection_points < 0 or self.samples_per_side < 1:
            raise ValueError("bad intersection point or sample count")
        if not 0 <= self.roughness < 1:
            raise ValueError("roughness must lie in [0, 1)")
        if self.lead is not None and self.lead < 0:
            raise ValueError("lead must be nonnegative")

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        fields = set(cls.__dataclass_fields__)
        unknown = set(d) - fields
        if unknown:
            raise ValueError(f"unknown synth key(s) {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def _station_factors(spec: SynthSpec) -> np.ndarray:
    """Seeded per-station multipliers in [1 - roughness, 1 + roughness].

    Station-to-station variation is too fast for the profile spline to
    follow, so any path off the valley line pays for earthwork.
    """
    rng = np.random.default_rng(spec.seed)
    return 1.0 + spec.roughness * rng.uniform(-1.0, 1.0, spec.stations)


def default_design(stations: int) -> VAlignConfig:
    return VAlignConfig(
        g_lo=-0.12,
        g_hi=0.12,
        p=1.0,
        q=1.5,
        haul=0.2,
        width=8.0,
        borrow=(Pit(0, 4.0, 1e6),),
        waste=(Pit(stations - 1, 2.0, 1e6),),
    )


def synth_corridor(spec: SynthSpec, design: VAlignConfig | None = None) -> Corridor:
    n, hw = spec.stations, spec.half_width
    length = (n - 1) * spec.spacing
    factor = _station_factors(spec)
    offsets = np.linspace(-hw, hw, 2 * spec.samples_per_side + 1)
    offsets[spec.samples_per_side] = 0.0

    def elev(j: int, x: float, off: float) -> float:
        t = (off + hw) / (2 * hw)
        if spec.family == "flat":
            return spec.base_elev
        if spec.family == "tilted-plane":
            return spec.base_elev + spec.along_slope * x + spec.cross_slope * off
        bowl = spec.depth * (t - spec.t_star) ** 2 * factor[j]
        return spec.base_elev + bowl if spec.family == "valley" else spec.base_elev - bowl

    stations = []
    for j in range(n):
        x = j * spec.spacing
        samples = tuple(GroundSample(float(o), float(elev(j, x, o))) for o in offsets)
        stations.append(Station(j, (x, 0.0), (x, hw), (x, -hw), samples))

    # endpoints sit a run-in before the first and after the last station so
    # the path is free to reach any offset at every station
    lead = spec.spacing if spec.lead is None else spec.lead
    start, end = (-lead, 0.0), (length + lead, 0.0)
    k = spec.intersection_points
    gap = length / (k + 1)
    boxes = []
    pts = [start]
    for i in range(1, k + 1):
        cx = i * gap
        # neighbouring boxes overlap so intersection points can slide along the road
        lo = cx - gap if i > 1 else -lead
        hi = cx + gap if i < k else length + lead
        boxes.append(Box((lo, -hw), (hi, hw)))
        pts.append((cx, 0.0))
    pts.append(end)
    initial = (tuple(pts), tuple([spec.r_min] * k))

    return Corridor(
        stations=tuple(stations),
        start=start,
        end=end,
        boxes=tuple(boxes),
        r_min=spec.r_min,
        design=design if design is not None else default_design(n),
        initial=initial,
    )


def valley_alignment(corridor: Corridor, t_star: float) -> list[tuple[float, float]]:
    """Intersection points that put every station crossing on the line ``t_star``.

    Only meaningful for the straight synthetic layout with a run-in: the
    first and last points sit halfway into the run-in, so the turns onto the
    valley line finish before the end stations.  Used as a construction
    oracle in tests.
    """
    hw = abs(corridor.stations[0].left[1])
    y = hw - 2 * hw * t_star
    x0 = (corridor.start[0] + corridor.stations[0].base[0]) / 2
    x1 = (corridor.end[0] + corridor.stations[-1].base[0]) / 2
    k = corridor.n - 2
    if k == 1:
        return [((x0 + x1) / 2, y)]
    return [(float(x), float(y)) for x in np.linspace(x0, x1, k)]
