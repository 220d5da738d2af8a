"""Plan-view SVG of a corridor, its terrain contours and candidate alignments.

Contours come from marching squares on the station x cross-section grid,
so they follow the surveyed data rather than an interpolated raster.
Every path piece (tangent segment or arc) is written as its own ``<path>``;
boundary and contours use ``<polygon>``/``<polyline>``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .geometry import Alignment, Arc, Path, Segment, build_path
from .terrain import Corridor, cross_section_point, ground_elevation

STYLES = {
    "solid": "",
    "dashed": "8,5",
    "dotted": "2,4",
}


@dataclass(frozen=True)
class RenderSpec:
    width: int = 900
    height: int = 600
    margin: float = 24.0
    contour_interval: float = 1.0
    boundary: bool = True
    styles: tuple[str, ...] = ("solid", "dashed", "dotted")
    colors: tuple[str, ...] = ("#000000", "#c0392b", "#1f5fa8")
    stroke_width: float = 2.0

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("canvas size must be positive")
        if not self.contour_interval > 0:
            raise ValueError("contour interval must be positive")
        if self.margin < 0 or 2 * self.margin >= min(self.width, self.height):
            raise ValueError("margin leaves no room to draw")
        unknown = set(self.styles) - set(STYLES)
        if unknown:
            raise ValueError(f"unknown stroke style(s) {sorted(unknown)}")

    @classmethod
    def from_dict(cls, d: dict) -> "RenderSpec":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown render key(s) {sorted(unknown)}")
        d = dict(d)
        for k in ("styles", "colors"):
            if k in d:
                d[k] = tuple(d[k])
        return cls(**d)


@dataclass(frozen=True)
class Viewport:
    """Uniform-scale affine map from world metres to canvas pixels (y up -> y down)."""

    x0: float
    y0: float
    scale: float
    height: float
    pad_x: float
    pad_y: float

    @classmethod
    def fit(cls, lo, hi, width: float, height: float, margin: float) -> "Viewport":
        dx = max(hi[0] - lo[0], 1e-9)
        dy = max(hi[1] - lo[1], 1e-9)
        s = min((width - 2 * margin) / dx, (height - 2 * margin) / dy)
        pad_x = margin + ((width - 2 * margin) - s * dx) / 2
        pad_y = margin + ((height - 2 * margin) - s * dy) / 2
        return cls(float(lo[0]), float(lo[1]), float(s), float(height), float(pad_x), float(pad_y))

    def to_canvas(self, p) -> tuple[float, float]:
        x, y = float(p[0]), float(p[1])
        return (
            self.pad_x + (x - self.x0) * self.scale,
            self.height - self.pad_y - (y - self.y0) * self.scale,
        )

    def to_world(self, q) -> tuple[float, float]:
        u, v = float(q[0]), float(q[1])
        return (
            (u - self.pad_x) / self.scale + self.x0,
            (self.height - self.pad_y - v) / self.scale + self.y0,
        )


def _bounds(corridor: Corridor, paths: Sequence[Path]):
    pts = [corridor.start, corridor.end]
    for st in corridor.stations:
        pts += [st.left, st.right]
    for b in corridor.boxes:
        pts += [b.lo, b.hi]
    for p in paths:
        pts += list(map(tuple, p.sample(1.0)))
    a = np.asarray(pts, dtype=float)
    return a.min(axis=0), a.max(axis=0)


# -- contours ----------------------------------------------------------------

def terrain_grid(corridor: Corridor):
    """Station x t grid: world positions ``(ns, nt, 2)`` and elevations ``(ns, nt)``.

    The t values are the union of every station's normalised sample positions.
    """
    ts = set()
    for st in corridor.stations:
        span = st.max_offset - st.min_offset
        ts.update(float((o - st.min_offset) / span) for o in st.offsets)
    tgrid = np.array(sorted(ts))
    tgrid[0], tgrid[-1] = 0.0, 1.0
    ns, nt = corridor.n_stations, len(tgrid)
    xy = np.empty((ns, nt, 2))
    z = np.empty((ns, nt))
    for j, st in enumerate(corridor.stations):
        for k, t in enumerate(tgrid):
            xy[j, k] = cross_section_point(st, t)
            z[j, k] = ground_elevation(st, t)
    return xy, z


def contour_levels(z: np.ndarray, interval: float) -> list[float]:
    lo = math.ceil(float(z.min()) / interval)
    hi = math.floor(float(z.max()) / interval)
    return [k * interval for k in range(lo, hi + 1)]


def marching_squares(z: np.ndarray, level: float) -> list[list[tuple[tuple, float]]]:
    """Iso-lines of ``z`` at ``level`` as chains of edge crossings.

    Each crossing is ``((node_a, node_b), frac)``: the point lies at
    ``frac`` of the way from grid node ``a`` to ``b``.  Saddle cells are
    resolved by the cell-centre average.  Chains are open or closed
    (closed chains repeat their first crossing at the end).
    """
    above = z >= level
    rows, cols = z.shape

    def crossing(a, b):
        key = (a, b) if a < b else (b, a)
        za, zb = z[key[0]], z[key[1]]
        return key, float((level - za) / (zb - za))

    links: dict[tuple, list[tuple]] = {}
    info: dict[tuple, float] = {}

    def link(e1, e2):
        (k1, f1), (k2, f2) = e1, e2
        info[k1], info[k2] = f1, f2
        links.setdefault(k1, []).append(k2)
        links.setdefault(k2, []).append(k1)

    for j in range(rows - 1):
        for k in range(cols - 1):
            c = [(j, k), (j, k + 1), (j + 1, k + 1), (j + 1, k)]
            s = [bool(above[p]) for p in c]
            if all(s) or not any(s):
                continue
            edges = [None] * 4
            for e in range(4):
                a, b = c[e], c[(e + 1) % 4]
                if s[e] != s[(e + 1) % 4]:
                    edges[e] = crossing(a, b)
            hits = [e for e in range(4) if edges[e] is not None]
            if len(hits) == 2:
                link(edges[hits[0]], edges[hits[1]])
                continue
            centre = float(np.mean([z[p] for p in c])) >= level
            if centre == s[0]:
                # corners 0 and 2 connect through the centre; cut off 1 and 3
                link(edges[0], edges[1])
                link(edges[2], edges[3])
            else:
                link(edges[3], edges[0])
                link(edges[1], edges[2])

    chains = []
    seen: set[tuple] = set()
    # open chains first (start at degree-one nodes), then loops
    starts = [n for n, nb in links.items() if len(nb) == 1] + list(links)
    for s0 in starts:
        if s0 in seen:
            continue
        chain = [s0]
        seen.add(s0)
        prev, cur = None, s0
        while True:
            nxt = [n for n in links[cur] if n != prev and (n not in seen or (n == s0 and len(chain) > 2))]
            if not nxt:
                break
            prev, cur = cur, nxt[0]
            chain.append(cur)
            if cur == s0:
                break
            seen.add(cur)
        chains.append([(key, info[key]) for key in chain])
    return chains


def _crossing_point(xy: np.ndarray, key, frac: float) -> np.ndarray:
    a, b = key
    return xy[a] + frac * (xy[b] - xy[a])


def world_contours(corridor: Corridor, interval: float) -> list[tuple[float, list[np.ndarray]]]:
    """Contour polylines in world coordinates, per level."""
    xy, z = terrain_grid(corridor)
    out = []
    for level in contour_levels(z, interval):
        lines = [np.array([_crossing_point(xy, k, f) for k, f in ch]) for ch in marching_squares(z, level)]
        out.append((level, [ln for ln in lines if len(ln) >= 2]))
    return out


# -- alignment pieces -------------------------------------------------------

def piece_d(piece, vp: Viewport) -> str:
    """SVG path data for one tangent segment or arc."""
    if isinstance(piece, Segment):
        (x0, y0), (x1, y1) = vp.to_canvas(piece.start), vp.to_canvas(piece.end)
        return f"M {x0:.3f} {y0:.3f} L {x1:.3f} {y1:.3f}"
    assert isinstance(piece, Arc)
    (x0, y0), (x1, y1) = vp.to_canvas(piece.start), vp.to_canvas(piece.end_point)
    r = piece.radius * vp.scale
    large = 1 if abs(piece.sweep) > math.pi else 0
    # the y flip keeps the on-screen turning sense, and SVG's sweep flag 1 is
    # visually clockwise, which is a negative (clockwise) world sweep
    sweep = 1 if piece.sweep < 0 else 0
    return f"M {x0:.3f} {y0:.3f} A {r:.3f} {r:.3f} 0 {large} {sweep} {x1:.3f} {y1:.3f}"


def _points_attr(pts, vp: Viewport) -> str:
    return " ".join("{:.3f},{:.3f}".format(*vp.to_canvas(p)) for p in pts)


def render_svg(corridor: Corridor, alignments: Sequence[tuple[str, Alignment]] = (),
               spec: RenderSpec = RenderSpec()) -> str:
    """SVG text for ``corridor`` with each ``(label, alignment)`` drawn on top.

    The first alignment takes the first style (solid), later ones cycle
    through the remaining styles.
    """
    paths = [(label, build_path(a)) for label, a in alignments]
    lo, hi = _bounds(corridor, [p for _, p in paths])
    vp = Viewport.fit(lo, hi, spec.width, spec.height, spec.margin)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{spec.width}" height="{spec.height}" '
        f'viewBox="0 0 {spec.width} {spec.height}">',
        f'<rect x="0" y="0" width="{spec.width}" height="{spec.height}" fill="#ffffff"/>',
    ]

    out.append('<g class="contours" fill="none" stroke="#8c6d46" stroke-width="0.6" stroke-opacity="0.7">')
    for level, lines in world_contours(corridor, spec.contour_interval):
        for ln in lines:
            out.append(f'<polyline data-level="{level:g}" points="{_points_attr(ln, vp)}"/>')
    out.append("</g>")

    if spec.boundary:
        ring = [st.left for st in corridor.stations] + [st.right for st in reversed(corridor.stations)]
        out.append(f'<polygon class="boundary" points="{_points_attr(ring, vp)}" '
                   'fill="none" stroke="#444444" stroke-width="1.2"/>')

    for k, (label, path) in enumerate(paths):
        style = spec.styles[0] if k == 0 else spec.styles[1 + (k - 1) % max(1, len(spec.styles) - 1)]
        color = spec.colors[min(k, len(spec.colors) - 1)]
        dash = STYLES[style]
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<g class="alignment" data-label="{escape(label)}" fill="none" stroke="{color}" '
                   f'stroke-width="{spec.stroke_width}"{dash_attr}>')
        for piece in path.pieces:
            out.append(f'<path d="{piece_d(piece, vp)}"/>')
        out.append("</g>")

    out.append("</svg>")
    return "\n".join(out) + "\n"


def viewport_for(corridor: Corridor, alignments: Sequence[tuple[str, Alignment]] = (),
                 spec: RenderSpec = RenderSpec()) -> Viewport:
    """The transform ``render_svg`` uses for the same inputs."""
    paths = [build_path(a) for _, a in alignments]
    lo, hi = _bounds(corridor, paths)
    return Viewport.fit(lo, hi, spec.width, spec.height, spec.margin)
