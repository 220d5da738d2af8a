"""Line-and-arc horizontal alignment geometry.

An alignment is a polyline of intersection points ``P_i`` with a radius
``r_i`` at each interior vertex.  Each vertex is rounded by a circular arc
tangent to both legs; the arcs are joined by straight tangent segments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

THETA_MIN = 1e-3        # sharper turns are rejected as degenerate (rad)
STRAIGHT_TOL = 1e-9     # |theta - pi| below this is treated as straight through
COINCIDENT_TOL = 1e-9   # m


class GeometryError(ValueError):
    """Base class; ``index`` is the offending intersection point, if any."""

    def __init__(self, message: str, index: int | None = None):
        self.index = index
        super().__init__(message if index is None else f"{message} (intersection point {index})")


class CoincidentPointsError(GeometryError):
    pass


class DegenerateTurnError(GeometryError):
    pass


class TangentOverrunError(GeometryError):
    pass


class NoCrossingError(GeometryError):
    pass


def _vec(p) -> np.ndarray:
    return np.asarray(p, dtype=float)


def _unit(v: np.ndarray) -> np.ndarray:
    return v / math.hypot(v[0], v[1])


def _cross(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def _norm(v) -> float:
    return math.hypot(v[0], v[1])


# -- per-vertex constructions ---------------------------------------------

def turn_angle(p_prev, p, p_next) -> float:
    """Interior angle at ``p`` between the legs to its neighbours, in (0, pi]."""
    P0, P, P1 = _vec(p_prev), _vec(p), _vec(p_next)
    U, V = P0 - P, P1 - P
    nu, nv = _norm(U), _norm(V)
    if nu <= COINCIDENT_TOL or nv <= COINCIDENT_TOL or _norm(P1 - P0) <= COINCIDENT_TOL:
        raise CoincidentPointsError("coincident points in turn")
    c = float(U @ V) / (nu * nv)
    return math.acos(min(1.0, max(-1.0, c)))


def tangent_length(r: float, theta: float) -> float:
    """Distance from the intersection point to either tangent point."""
    if r < 0:
        raise GeometryError(f"negative radius {r}")
    if not 0 < theta <= math.pi:
        raise DegenerateTurnError(f"turn angle {theta} outside (0, pi]")
    if r == 0 or math.pi - theta < STRAIGHT_TOL:
        return 0.0
    if theta <= THETA_MIN:
        raise DegenerateTurnError(f"turn angle {theta:.3g} rad below {THETA_MIN:g}")
    return r / math.tan(theta / 2)


def tangent_points(p_prev, p, p_next, r: float) -> tuple[np.ndarray, np.ndarray]:
    P0, P, P1 = _vec(p_prev), _vec(p), _vec(p_next)
    lt = tangent_length(r, turn_angle(P0, P, P1))
    U, V = P0 - P, P1 - P
    if lt > _norm(U) or lt > _norm(V):
        raise TangentOverrunError(f"tangent length {lt:.6g} m exceeds a leg")
    return P + lt * _unit(U), P + lt * _unit(V)


def bisector_foot(p_prev, p, p_next) -> np.ndarray:
    """Where the bisector of the angle at ``p`` meets the opposite side."""
    P0, P, P1 = _vec(p_prev), _vec(p), _vec(p_next)
    U, V, W = P0 - P, P1 - P, P1 - P0
    nu, nv, nw = _norm(U), _norm(V), _norm(W)
    if min(nu, nv, nw) <= COINCIDENT_TOL:
        raise CoincidentPointsError("coincident points in triangle")
    if abs(_cross(U, V)) <= COINCIDENT_TOL * nu * nv:
        raise DegenerateTurnError("collinear points do not form a triangle")
    lb = nu * nw / (nu + nv)
    return P0 + lb * (W / nw)


def curve_center(p_prev, p, p_next, r: float) -> np.ndarray:
    P0, P, P1 = _vec(p_prev), _vec(p), _vec(p_next)
    theta = turn_angle(P0, P, P1)
    lt = tangent_length(r, theta)
    if lt > _norm(P0 - P) or lt > _norm(P1 - P):
        raise TangentOverrunError(f"tangent length {lt:.6g} m exceeds a leg")
    if lt == 0.0:
        return P.copy()
    lx = lt / math.cos(theta / 2)
    Q = bisector_foot(P0, P, P1)
    return P + lx * _unit(Q - P)


# -- alignment and path -----------------------------------------------------

@dataclass(frozen=True)
class Alignment:
    points: tuple[tuple[float, float], ...]
    radii: tuple[float, ...]  # one per point; endpoints are 0

    def __post_init__(self):
        if len(self.points) < 2:
            raise ValueError("an alignment needs at least two points")
        if len(self.radii) != len(self.points):
            raise ValueError("one radius per point expected")
        if self.radii[0] != 0 or self.radii[-1] != 0:
            raise ValueError("endpoint radii must be 0")
        if not all(math.isfinite(r) for r in self.radii):
            raise ValueError("radii must be finite")
        for i in range(1, len(self.points)):
            if _norm(np.subtract(self.points[i], self.points[i - 1])) <= COINCIDENT_TOL:
                raise CoincidentPointsError("consecutive points coincide", i)

    @classmethod
    def from_interior(cls, points: Sequence, interior_radii: Sequence[float]) -> "Alignment":
        pts = tuple((float(x), float(y)) for x, y in points)
        return cls(pts, (0.0, *map(float, interior_radii), 0.0))

    @property
    def n(self) -> int:
        return len(self.points)

    def polyline_length(self) -> float:
        return float(sum(_norm(np.subtract(b, a)) for a, b in zip(self.points, self.points[1:])))


@dataclass(frozen=True)
class Segment:
    start: np.ndarray
    end: np.ndarray
    start_chainage: float
    length: float

    def point_at(self, ds: float) -> np.ndarray:
        return self.start + (self.end - self.start) * (ds / self.length)

    def direction_at(self, ds: float) -> np.ndarray:
        return _unit(self.end - self.start)

    @property
    def end_point(self) -> np.ndarray:
        return self.end


@dataclass(frozen=True)
class Arc:
    center: np.ndarray
    radius: float
    start_angle: float
    sweep: float  # signed; positive is counter-clockwise
    start_chainage: float
    length: float
    index: int = -1  # intersection point this arc rounds

    def point_at(self, ds: float) -> np.ndarray:
        a = self.start_angle + math.copysign(ds / self.radius, self.sweep)
        return self.center + self.radius * np.array([math.cos(a), math.sin(a)])

    def direction_at(self, ds: float) -> np.ndarray:
        a = self.start_angle + math.copysign(ds / self.radius, self.sweep)
        tangent = np.array([-math.sin(a), math.cos(a)])
        return tangent if self.sweep > 0 else -tangent

    @property
    def start(self) -> np.ndarray:
        return self.point_at(0.0)

    @property
    def end_point(self) -> np.ndarray:
        return self.point_at(self.length)


PathPiece = Union[Segment, Arc]


@dataclass(frozen=True)
class Path:
    pieces: tuple[PathPiece, ...]

    @property
    def total_length(self) -> float:
        if not self.pieces:
            return 0.0
        last = self.pieces[-1]
        return last.start_chainage + last.length

    def point_at(self, chainage: float) -> np.ndarray:
        for piece in self.pieces:
            if chainage <= piece.start_chainage + piece.length:
                return piece.point_at(max(0.0, chainage - piece.start_chainage))
        last = self.pieces[-1]
        return last.point_at(last.length)

    def sample(self, step: float = 1.0) -> np.ndarray:
        """Points along the path at roughly ``step`` spacing (for drawing)."""
        out = []
        for piece in self.pieces:
            k = max(1, int(math.ceil(piece.length / step))) if isinstance(piece, Arc) else 1
            for j in range(k):
                out.append(piece.point_at(piece.length * j / k))
        out.append(self.pieces[-1].end_point)
        return np.array(out)


def tangent_lengths(alignment: Alignment) -> list[float]:
    """Tangent length at every point (0 at the endpoints).

    Raises :class:`DegenerateTurnError` carrying the vertex index.
    """
    pts = alignment.points
    out = [0.0]
    for i in range(1, alignment.n - 1):
        try:
            theta = turn_angle(pts[i - 1], pts[i], pts[i + 1])
            out.append(tangent_length(alignment.radii[i], theta))
        except GeometryError as exc:
            raise type(exc)(str(exc), i) from None
    out.append(0.0)
    return out


def leg_margins(alignment: Alignment, lts: Sequence[float]) -> list[float]:
    """Leg length minus the tangent lengths consumed at both of its ends."""
    pts = alignment.points
    return [
        _norm(np.subtract(pts[i], pts[i - 1])) - lts[i - 1] - lts[i]
        for i in range(1, alignment.n)
    ]


def build_path(alignment: Alignment) -> Path:
    """Realise ``alignment`` as tangent segments and circular arcs."""
    pts = [_vec(p) for p in alignment.points]
    n = alignment.n
    lts = tangent_lengths(alignment)
    for i, m in enumerate(leg_margins(alignment, lts), start=1):
        if m < 0:
            # blame the interior vertex whose arc claims more of this leg
            ends = [k for k in (i - 1, i) if 0 < k < n - 1]
            culprit = max(ends, key=lambda k: lts[k])
            raise TangentOverrunError(f"arcs overlap on leg {i - 1}->{i} by {-m:.6g} m", culprit)

    pieces: list[PathPiece] = []
    chain = 0.0
    cursor = pts[0]

    def add_segment(a, b):
        nonlocal chain
        L = _norm(b - a)
        if L > 0:
            pieces.append(Segment(a.copy(), b.copy(), chain, L))
            chain += L

    for i in range(1, n - 1):
        lt = lts[i]
        if lt == 0.0:
            continue  # sharp vertex or straight through: the polyline carries on
        P0, P, P1 = pts[i - 1], pts[i], pts[i + 1]
        U, V = P0 - P, P1 - P
        E = P + lt * _unit(U)
        F = P + lt * _unit(V)
        r = alignment.radii[i]
        theta = turn_angle(P0, P, P1)
        C = curve_center(P0, P, P1, r)
        turn = _cross(P - P0, P1 - P)
        sweep = math.copysign(math.pi - theta, turn)
        add_segment(cursor, E)
        start_angle = math.atan2(E[1] - C[1], E[0] - C[0])
        length = r * abs(sweep)
        pieces.append(Arc(C, r, start_angle, sweep, chain, length, i))
        chain += length
        cursor = F
    add_segment(cursor, pts[-1])
    if not pieces:
        raise CoincidentPointsError("alignment has zero length")
    return Path(tuple(pieces))


# -- cross-section intersection -------------------------------------------

_SEG_EPS = 1e-12
_ANG_EPS = 1e-12


def _segment_hits(seg: Segment, U, D):
    """Parameters (t on line U + t D, chainage) where the segment meets the line."""
    e = seg.end - seg.start
    den = _cross(e, D)
    if abs(den) <= 1e-15 * _norm(e) * _norm(D):
        return []
    w = U - seg.start
    a = _cross(w, D) / den   # along the segment, [0, 1]
    t = _cross(w, e) / den   # along the cross-section line
    if -_SEG_EPS <= a <= 1 + _SEG_EPS:
        a = min(max(a, 0.0), 1.0)
        return [(t, seg.start_chainage + a * seg.length)]
    return []


def _arc_hits(arc: Arc, U, D):
    # |U + t D - C|^2 = r^2
    w = U - arc.center
    A = float(D @ D)
    B = 2.0 * float(w @ D)
    Cq = float(w @ w) - arc.radius**2
    disc = B * B - 4 * A * Cq
    if disc < 0:
        return []
    sq = math.sqrt(disc)
    out = []
    for t in {(-B - sq) / (2 * A), (-B + sq) / (2 * A)}:
        p = U + t * D
        ang = math.atan2(p[1] - arc.center[1], p[0] - arc.center[0])
        rel = (ang - arc.start_angle) * math.copysign(1.0, arc.sweep)
        rel = rel % (2 * math.pi)
        if rel > 2 * math.pi - _ANG_EPS:
            rel = 0.0
        if rel <= abs(arc.sweep) + _ANG_EPS:
            rel = min(rel, abs(arc.sweep))
            out.append((t, arc.start_chainage + arc.radius * rel))
    return out


def path_station_parameter(path: Path, station, prev_chainage: float = -math.inf) -> tuple[float, float]:
    """First crossing of ``path`` with the station's cross-section line.

    Only crossings with chainage strictly greater than ``prev_chainage`` are
    considered.  Returns ``(t, chainage)``; ``t`` may fall outside [0, 1].
    """
    U = _vec(station.left)
    D = _vec(station.right) - U
    best = None
    for piece in path.pieces:
        if piece.start_chainage + piece.length <= prev_chainage:
            continue
        hits = _segment_hits(piece, U, D) if isinstance(piece, Segment) else _arc_hits(piece, U, D)
        for t, ch in hits:
            if ch > prev_chainage and (best is None or ch < best[1]):
                best = (t, ch)
        if best is not None and best[1] <= piece.start_chainage + piece.length:
            # later pieces start at or beyond this chainage
            break
    if best is None:
        raise NoCrossingError(f"path does not cross station {getattr(station, 'index', '?')} "
                              f"after chainage {prev_chainage:.6g}")
    return best
