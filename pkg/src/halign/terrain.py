"""Corridor input data: stations, ground samples and cross-section lines."""
from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass
from typing import Any

import numpy as np

from .valign import VAlignConfig, VAlignConfigError

log = logging.getLogger(__name__)

MAX_STATION_SPACING = 30.0
COLLINEAR_TOL = 1e-9


class CorridorError(ValueError):
    """Malformed or invalid corridor input; ``locus`` names the offending field."""

    def __init__(self, message: str, locus: str = ""):
        self.locus = locus
        super().__init__(f"{locus}: {message}" if locus else message)


class OutOfCorridorError(ValueError):
    """A cross-section parameter falls outside the sampled range [0, 1]."""


class SpacingWarning(UserWarning):
    pass


Point = tuple[float, float]


@dataclass(frozen=True)
class GroundSample:
    offset: float  # signed, left negative
    elev: float


@dataclass(frozen=True)
class Station:
    index: int
    base: Point
    left: Point   # U_j, at the smallest offset
    right: Point  # V_j, at the largest offset
    samples: tuple[GroundSample, ...]

    def __post_init__(self):
        where = f"stations[{self.index}]"
        if len(self.samples) < 2:
            raise CorridorError("needs at least 2 samples", where)
        offs = [s.offset for s in self.samples]
        if any(b <= a for a, b in zip(offs, offs[1:])):
            raise CorridorError("samples not strictly increasing in offset", where)
        if 0.0 not in offs:
            raise CorridorError("samples must include offset 0 (the base data point)", where)
        U, B, V = (np.asarray(p, dtype=float) for p in (self.left, self.base, self.right))
        span = np.linalg.norm(V - U)
        if not span > 0:
            raise CorridorError("left and right ends coincide", where)
        d = V - U
        resid = abs(d[0] * (B - U)[1] - d[1] * (B - U)[0]) / span
        if resid > COLLINEAR_TOL:
            raise CorridorError(f"base point is {resid:.3g} m off the left-right line", where)
        # keep plain arrays around for fast evaluation
        object.__setattr__(self, "_offs", np.asarray(offs, dtype=float))
        object.__setattr__(self, "_elev", np.asarray([s.elev for s in self.samples], dtype=float))

    @property
    def min_offset(self) -> float:
        return self.samples[0].offset

    @property
    def max_offset(self) -> float:
        return self.samples[-1].offset

    @property
    def offsets(self) -> np.ndarray:
        return self._offs

    @property
    def elevations(self) -> np.ndarray:
        return self._elev

    def to_dict(self) -> dict[str, Any]:
        return {
            "base": list(self.base),
            "left": list(self.left),
            "right": list(self.right),
            "samples": [{"offset": s.offset, "elev": s.elev} for s in self.samples],
        }


@dataclass(frozen=True)
class Box:
    lo: Point
    hi: Point

    @property
    def center(self) -> Point:
        return ((self.lo[0] + self.hi[0]) / 2, (self.lo[1] + self.hi[1]) / 2)


@dataclass(frozen=True)
class Corridor:
    stations: tuple[Station, ...]
    start: Point
    end: Point
    boxes: tuple[Box, ...]
    r_min: float
    design: VAlignConfig
    # optional engineer's alignment: (points, interior radii)
    initial: tuple[tuple[Point, ...], tuple[float, ...]] | None = None

    @property
    def n(self) -> int:
        """Number of intersection points, endpoints included."""
        return len(self.boxes) + 2

    @property
    def n_stations(self) -> int:
        return len(self.stations)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "start": list(self.start),
            "end": list(self.end),
            "r_min": self.r_min,
            "boxes": [{"lo": list(b.lo), "hi": list(b.hi)} for b in self.boxes],
            "valign": self.design.to_dict(),
            "stations": [s.to_dict() for s in self.stations],
        }
        if self.initial is not None:
            pts, radii = self.initial
            d["initial"] = {"points": [list(p) for p in pts], "radii": list(radii)}
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


# -- cross-section queries ------------------------------------------------

def cross_section_point(station: Station, t: float) -> np.ndarray:
    """Point ``(1 - t) U + t V`` on the station's cross-section line."""
    U = np.asarray(station.left, dtype=float)
    V = np.asarray(station.right, dtype=float)
    return (1.0 - t) * U + t * V


def _check_t(t: float) -> None:
    if not 0.0 <= t <= 1.0:
        raise OutOfCorridorError(f"t={t!r} outside [0, 1]")


def lateral_offset_of_t(station: Station, t: float) -> float:
    _check_t(t)
    lo, hi = station.min_offset, station.max_offset
    return lo + t * (hi - lo)


def ground_elevation(station: Station, t: float) -> float:
    """Ground elevation at cross-section parameter ``t``, by linear interpolation."""
    off = lateral_offset_of_t(station, t)
    offs, elev = station.offsets, station.elevations
    k = int(np.searchsorted(offs, off, side="right")) - 1
    k = min(max(k, 0), len(offs) - 2)
    x0, x1 = offs[k], offs[k + 1]
    w = (off - x0) / (x1 - x0)
    if w == 0.0:
        return float(elev[k])
    if w == 1.0:
        return float(elev[k + 1])
    return float(elev[k] + w * (elev[k + 1] - elev[k]))


# -- loading ---------------------------------------------------------------

_TOP_KEYS = {"start", "end", "r_min", "boxes", "valign", "stations", "initial"}
_STATION_KEYS = {"base", "left", "right", "samples"}


def _point(value, locus) -> Point:
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        raise CorridorError("expected a pair of numbers [x, y]", locus)
    x, y = float(value[0]), float(value[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise CorridorError("coordinates must be finite", locus)
    return (x, y)


def _number(value, locus) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise CorridorError("expected a number", locus)
    if not math.isfinite(value):
        raise CorridorError("must be finite", locus)
    return float(value)


def _require(d: dict, key: str, locus: str):
    if key not in d:
        raise CorridorError(f"missing key {key!r}", locus)
    return d[key]


def corridor_from_dict(data: Any) -> Corridor:
    if not isinstance(data, dict):
        raise CorridorError("top level must be an object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise CorridorError(f"unknown key(s) {sorted(unknown)}")

    start = _point(_require(data, "start", ""), "start")
    end = _point(_require(data, "end", ""), "end")
    r_min = _number(_require(data, "r_min", ""), "r_min")
    if r_min < 0:
        raise CorridorError("must be nonnegative", "r_min")

    boxes = []
    for k, b in enumerate(_require(data, "boxes", "")):
        loc = f"boxes[{k}]"
        if not isinstance(b, dict) or set(b) != {"lo", "hi"}:
            raise CorridorError("expected exactly keys 'lo' and 'hi'", loc)
        lo, hi = _point(b["lo"], loc + ".lo"), _point(b["hi"], loc + ".hi")
        if lo[0] > hi[0] or lo[1] > hi[1]:
            raise CorridorError("lo corner exceeds hi corner", loc)
        boxes.append(Box(lo, hi))

    raw_stations = _require(data, "stations", "")
    if not isinstance(raw_stations, list) or len(raw_stations) < 2:
        raise CorridorError("need at least 2 stations", "stations")
    stations = []
    for j, st in enumerate(raw_stations):
        loc = f"stations[{j}]"
        if not isinstance(st, dict):
            raise CorridorError("expected an object", loc)
        bad = set(st) - _STATION_KEYS
        if bad:
            raise CorridorError(f"unknown key(s) {sorted(bad)}", loc)
        samples = []
        for k, smp in enumerate(_require(st, "samples", loc)):
            sl = f"{loc}.samples[{k}]"
            if not isinstance(smp, dict) or set(smp) != {"offset", "elev"}:
                raise CorridorError("expected exactly keys 'offset' and 'elev'", sl)
            samples.append(GroundSample(_number(smp["offset"], sl + ".offset"),
                                        _number(smp["elev"], sl + ".elev")))
        stations.append(Station(
            index=j,
            base=_point(_require(st, "base", loc), loc + ".base"),
            left=_point(_require(st, "left", loc), loc + ".left"),
            right=_point(_require(st, "right", loc), loc + ".right"),
            samples=tuple(samples),
        ))

    for st in stations:
        # U_j / V_j must sit at the extreme sample offsets
        U, B, V = (np.asarray(p) for p in (st.left, st.base, st.right))
        for end_pt, off, name in ((U, st.min_offset, "left"), (V, st.max_offset, "right")):
            if abs(np.linalg.norm(end_pt - B) - abs(off)) > 1e-6 * max(1.0, abs(off)):
                raise CorridorError(
                    f"{name} end is {np.linalg.norm(end_pt - B):.6g} m from base but the "
                    f"extreme offset is {off:.6g} m", f"stations[{st.index}].{name}")

    chain = [0.0]
    for a, b in zip(stations, stations[1:]):
        gap = float(np.linalg.norm(np.subtract(b.base, a.base)))
        if gap <= 0:
            raise CorridorError("coincides with the previous base point", f"stations[{b.index}].base")
        chain.append(chain[-1] + gap)
        if gap > MAX_STATION_SPACING:
            warnings.warn(f"stations {a.index}->{b.index} are {gap:.1f} m apart "
                          f"(> {MAX_STATION_SPACING:g} m); earthwork accuracy degrades",
                          SpacingWarning, stacklevel=2)

    try:
        design = VAlignConfig.from_dict(data.get("valign", {}))
        design.validate_for(len(stations))
    except (VAlignConfigError, TypeError, ValueError) as exc:
        raise CorridorError(str(exc), "valign") from None

    initial = None
    if "initial" in data:
        ini = data["initial"]
        if not isinstance(ini, dict) or set(ini) != {"points", "radii"}:
            raise CorridorError("expected exactly keys 'points' and 'radii'", "initial")
        pts = tuple(_point(p, f"initial.points[{k}]") for k, p in enumerate(ini["points"]))
        radii = tuple(_number(r, f"initial.radii[{k}]") for k, r in enumerate(ini["radii"]))
        if len(pts) != len(boxes) + 2 or len(radii) != len(boxes):
            raise CorridorError(
                f"expected {len(boxes) + 2} points and {len(boxes)} radii", "initial")
        initial = (pts, radii)

    return Corridor(tuple(stations), start, end, tuple(boxes), r_min, design, initial)


def load_corridor(text: str) -> Corridor:
    """Parse and validate corridor JSON text."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorridorError(f"invalid JSON ({exc.msg})", f"line {exc.lineno} col {exc.colno}") from None
    return corridor_from_dict(data)


def read_corridor(path) -> Corridor:
    with open(path, encoding="utf-8") as fh:
        return load_corridor(fh.read())


def save_corridor(corridor: Corridor, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(corridor.dumps())
        fh.write("\n")
