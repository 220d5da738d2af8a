"""Outer problem: intersection points and radii scored by the inner LP."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import dfo
from .feasibility import FeasibilityReport, assess
from .geometry import Alignment, GeometryError
from .terrain import Corridor, ground_elevation
from .valign import VAlignInfeasible, VAlignProblem, VAlignSolution, valign_cost

log = logging.getLogger(__name__)


class BaselineInfeasible(ValueError):
    pass


def baseline_alignment(corridor: Corridor) -> Alignment:
    """The engineer's alignment if the corridor carries one, else box centres at r_min."""
    if corridor.initial is not None:
        pts, radii = corridor.initial
        return Alignment.from_interior(pts, radii)
    pts = [corridor.start, *(b.center for b in corridor.boxes), corridor.end]
    return Alignment.from_interior(pts, [corridor.r_min] * len(corridor.boxes))


def pack(alignment: Alignment) -> np.ndarray:
    """Flat ``(x1, y1, r1, ..., x_{n-2}, y_{n-2}, r_{n-2})``; endpoints stay fixed."""
    out = []
    for (x, y), r in zip(alignment.points[1:-1], alignment.radii[1:-1]):
        out += [x, y, r]
    return np.asarray(out, dtype=float)


def unpack(corridor: Corridor, v) -> Alignment:
    v = np.asarray(v, dtype=float)
    k = corridor.n - 2
    if v.shape != (3 * k,):
        raise ValueError(f"outer vector has shape {v.shape}, expected ({3 * k},)")
    trip = v.reshape(k, 3)
    pts = [corridor.start, *((float(x), float(y)) for x, y, _ in trip), corridor.end]
    return Alignment.from_interior(pts, [float(r) for r in trip[:, 2]])


@dataclass
class Outcome:
    """Result of scoring one outer vector."""

    cost: float | None
    inner_skipped: bool
    reason: str = ""
    report: FeasibilityReport | None = field(default=None, repr=False)
    solution: VAlignSolution | None = field(default=None, repr=False)
    problem: VAlignProblem | None = field(default=None, repr=False)

    @property
    def feasible(self) -> bool:
        return self.cost is not None


def inner_problem(corridor: Corridor, report: FeasibilityReport) -> VAlignProblem:
    """Sections at the path's station crossings with interpolated ground."""
    s = np.array([c.chainage for c in report.containment])
    h = np.array([ground_elevation(st, c.t) for st, c in zip(corridor.stations, report.containment)])
    return VAlignProblem(s, h, corridor.design)


def evaluate_alignment(corridor: Corridor, alignment: Alignment) -> Outcome:
    report = assess(alignment, corridor)
    if not report.feasible:
        return Outcome(None, True, ",".join(report.reasons), report)
    problem = inner_problem(corridor, report)
    try:
        cost, sol = valign_cost(problem)
    except VAlignInfeasible:
        return Outcome(None, False, "inner-infeasible", report, problem=problem)
    return Outcome(cost, False, "", report, sol, problem)


def evaluate(corridor: Corridor, v) -> Outcome:
    """Barrier objective: inner cost if the alignment is feasible, else a verdict.

    Outer-constraint violations return without solving the inner LP
    (``inner_skipped=True``); an infeasible inner LP is reported with
    ``inner_skipped=False``.
    """
    try:
        alignment = unpack(corridor, v)
    except (GeometryError, ValueError) as exc:
        if np.asarray(v).shape != (3 * (corridor.n - 2),):
            raise
        return Outcome(None, True, f"geometry: {exc}")
    return evaluate_alignment(corridor, alignment)


def black_box(corridor: Corridor):
    """``evaluate`` adapted to the solver interface."""

    def f(v: np.ndarray) -> dfo.Evaluation:
        out = evaluate(corridor, v)
        return dfo.Evaluation(out.cost, out.inner_skipped, out.reason)

    return f


def improvement_percent(initial: float, optimized: float) -> float:
    if initial == 0:
        return 0.0
    return (initial - optimized) / initial * 100.0


@dataclass
class OptimizationReport:
    initial_cost: float
    optimized_cost: float
    evaluations: int
    inner_solves: int
    wall_clock: float
    best: Alignment | None
    solver: str
    seed: int | None = None
    name: str = ""
    trace: list[tuple[int, float]] = field(default_factory=list)
    termination: str = ""

    def __post_init__(self):
        if self.optimized_cost > self.initial_cost:
            raise ValueError("optimized cost exceeds the initial cost")

    @property
    def improvement(self) -> float:
        return improvement_percent(self.initial_cost, self.optimized_cost)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "name": self.name,
            "solver": self.solver,
            "seed": self.seed,
            "initial_cost": self.initial_cost,
            "optimized_cost": self.optimized_cost,
            "improvement_percent": self.improvement,
            "evaluations": self.evaluations,
            "inner_solves": self.inner_solves,
            "wall_clock_seconds": self.wall_clock,
            "termination": self.termination,
            "trace": [[k, c] for k, c in self.trace],
        }
        if self.best is not None:
            d["best"] = alignment_to_dict(self.best)
        return d


def alignment_to_dict(alignment: Alignment) -> dict[str, Any]:
    return {"points": [list(p) for p in alignment.points], "radii": list(alignment.radii[1:-1])}


def alignment_from_dict(d: dict) -> Alignment:
    if not isinstance(d, dict) or set(d) != {"points", "radii"}:
        raise ValueError("alignment must have exactly keys 'points' and 'radii'")
    return Alignment.from_interior(d["points"], d["radii"])


def optimize(corridor: Corridor, cfg: dfo.SearchConfig = dfo.SearchConfig(),
             solver: str = "det", seed: int | None = None, name: str = "",
             start: Alignment | None = None) -> tuple[OptimizationReport, dfo.RunResult]:
    """Improve the baseline alignment with the chosen pattern search."""
    base = start if start is not None else baseline_alignment(corridor)
    t0 = time.perf_counter()
    x0 = pack(base)
    first = evaluate(corridor, x0)
    if not first.feasible:
        raise BaselineInfeasible(
            f"baseline alignment is infeasible ({first.reason}); repair the corridor "
            "boxes, radii or initial alignment")
    result = dfo.run(black_box(corridor), x0, cfg, solver, seed)
    wall = time.perf_counter() - t0
    best = unpack(corridor, result.x)
    report = OptimizationReport(
        initial_cost=first.cost,
        optimized_cost=result.cost,
        evaluations=result.evaluations,
        inner_solves=result.inner_solves,
        wall_clock=wall,
        best=best,
        solver=solver,
        seed=result.seed if solver == "stoch" else None,
        name=name,
        trace=result.trace,
        termination=result.reason,
    )
    return report, result
