"""Seeded random inputs shared by several test modules."""
from __future__ import annotations

import math

import numpy as np

from halign.geometry import Alignment
from halign.valign import Pit, VAlignConfig, VAlignProblem


def random_triple(rng: np.random.Generator, scale: float = 10.0):
    """Three points with a turn comfortably away from degenerate, and a feasible radius."""
    while True:
        P = rng.uniform(-scale, scale, 2)
        a, b = rng.uniform(0, 2 * math.pi, 2)
        lu, lv = rng.uniform(0.5, scale, 2)
        P0 = P + lu * np.array([math.cos(a), math.sin(a)])
        P1 = P + lv * np.array([math.cos(b), math.sin(b)])
        U, V = P0 - P, P1 - P
        theta = math.acos(np.clip(U @ V / (lu * lv), -1, 1))
        if 0.05 < theta < math.pi - 0.05:
            break
    r_max = min(lu, lv) * math.tan(theta / 2)
    r = float(rng.uniform(0.02, 0.98) * r_max)
    return P0, P, P1, r, theta


def random_alignment(rng: np.random.Generator, n_points: int | None = None) -> Alignment:
    """A wandering polyline with radii that leave every leg some straight."""
    n = int(rng.integers(3, 8)) if n_points is None else n_points
    while True:
        heading = 0.0
        pts = [np.zeros(2)]
        for _ in range(n - 1):
            heading += rng.uniform(-2.2, 2.2)
            pts.append(pts[-1] + rng.uniform(2.0, 20.0) * np.array([math.cos(heading), math.sin(heading)]))
        P = np.array(pts)
        ok = True
        cap = []
        for i in range(1, n - 1):
            U, V = P[i - 1] - P[i], P[i + 1] - P[i]
            c = U @ V / (np.linalg.norm(U) * np.linalg.norm(V))
            theta = math.acos(np.clip(c, -1, 1))
            if not 0.1 < theta < math.pi - 1e-3:
                ok = False
                break
            # tangent length r/tan(theta/2) may use at most 45% of either leg
            lim = 0.45 * min(np.linalg.norm(U), np.linalg.norm(V))
            cap.append(lim * math.tan(theta / 2))
        if ok:
            radii = [float(rng.uniform(0.05, 1.0) * c) for c in cap]
            return Alignment.from_interior([tuple(p) for p in P], radii)


def random_valign(rng: np.random.Generator, n: int | None = None, segments: int | None = None,
                  pits: bool = True) -> VAlignProblem:
    """A random inner problem that is feasible by construction (large pit capacities)."""
    n = int(rng.integers(3, 31)) if n is None else n
    s = np.cumsum(np.r_[0.0, rng.uniform(3.0, 25.0, n - 1)])
    h = 100 + np.cumsum(rng.normal(0, 1.0, n))
    g = segments if segments is not None else int(rng.integers(1, max(2, (n - 1) // 2) + 1))
    g = min(g, n - 1)
    borrow = (Pit(int(rng.integers(n)), float(rng.uniform(0, 5)), 1e7),) if pits else ()
    waste = (Pit(int(rng.integers(n)), float(rng.uniform(0, 5)), 1e7),) if pits else ()
    cfg = VAlignConfig(
        g_lo=-float(rng.uniform(0.04, 0.15)),
        g_hi=float(rng.uniform(0.04, 0.15)),
        p=float(rng.uniform(0.2, 3)),
        q=float(rng.uniform(0.2, 3)),
        haul=float(rng.uniform(0, 1)),
        width=float(rng.uniform(4, 12)),
        borrow=borrow,
        waste=waste,
        segments=g,
    )
    return VAlignProblem(s, h, cfg)


def small_valign(rng: np.random.Generator) -> VAlignProblem:
    """At most four sections, one spline segment, one borrow and one waste pit."""
    n = int(rng.integers(3, 5))
    s = np.cumsum(np.r_[0.0, rng.uniform(5, 20, n - 1)])
    h = 100 + rng.uniform(-3, 3, n)
    cfg = VAlignConfig(
        g_lo=-0.08,
        g_hi=0.08,
        p=float(rng.uniform(0.5, 2)),
        q=float(rng.uniform(0.5, 2)),
        haul=float(rng.uniform(0, 0.5)),
        width=8.0,
        borrow=(Pit(int(rng.integers(n)), float(rng.uniform(0, 5)), float(rng.uniform(50, 500))),),
        waste=(Pit(int(rng.integers(n)), float(rng.uniform(0, 5)), float(rng.uniform(50, 500))),),
        segments=1,
    )
    return VAlignProblem(s, h, cfg)
