"""Result tables: per-road summaries, solver comparisons and win/tie sweeps.

Sign conventions follow the usual benchmark layout.  Differences are
percentages of the deterministic solver's figure, and a positive value
favours the stochastic solver: a cheaper optimum or fewer evaluations.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

from .bilevel import OptimizationReport, improvement_percent

TOLERANCES = tuple(range(1, 11))

SUMMARY_COLUMNS = (
    "Road",
    "Initial cost",
    "Optimized cost",
    "Improvement (%)",
    "Evaluations",
    "Wall-clock (s)",
)

COMPARISON_COLUMNS = (
    "Road",
    "Run",
    "Opt. cost det",
    "Opt. cost stoch",
    "Diff. in costs (%)",
    "Evals det",
    "Evals stoch",
    "Diff. in evals (%)",
)

SWEEP_COLUMNS = ("Tolerance (%)", "Det wins", "Stoch wins", "Ties")


def thousands(value: float) -> str:
    """Round half up to an integer and group digits: ``1897.5 -> '1,898'``."""
    return f"{math.floor(value + 0.5):,}"


def percent(value: float, signed: bool = False) -> str:
    """One decimal and a percent sign; ``signed`` adds '+' to positive values."""
    v = round(value, 1)
    if v == 0:
        v = 0.0  # no '-0.0%'
    return f"{v:+.1f}%" if signed and v != 0 else f"{v:.1f}%"


def run_label(report: OptimizationReport) -> str:
    name = report.name or "road"
    return name if report.solver == "det" else f"{name} [{report.solver} {report.seed}]"


def summary_row(report: OptimizationReport) -> list[str]:
    return [
        run_label(report),
        thousands(report.initial_cost),
        thousands(report.optimized_cost),
        percent(report.improvement),
        thousands(report.evaluations),
        thousands(report.wall_clock),
    ]


def format_table(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    """Plain aligned text: first column left, the rest right-justified."""
    rows = [list(map(str, r)) for r in rows]
    widths = [len(h) for h in header]
    for r in rows:
        widths = [max(w, len(c)) for w, c in zip(widths, r)]

    def line(cells):
        out = [cells[0].ljust(widths[0])]
        out += [c.rjust(w) for c, w in zip(cells[1:], widths[1:])]
        return "  ".join(out).rstrip()

    rule = "  ".join("-" * w for w in widths)
    return "\n".join([line(list(header)), rule, *(line(r) for r in rows)])


def summary_table(reports: Iterable[OptimizationReport]) -> str:
    return format_table(SUMMARY_COLUMNS, [summary_row(r) for r in reports])


def relative_difference(reference: float, other: float) -> float:
    """``(reference - other) / reference * 100``; positive when ``other`` is smaller."""
    return improvement_percent(reference, other)


@dataclass(frozen=True)
class ComparisonRow:
    road: str
    run: int
    det_cost: float
    stoch_cost: float
    det_evals: int
    stoch_evals: int

    @property
    def cost_diff(self) -> float:
        return relative_difference(self.det_cost, self.stoch_cost)

    @property
    def eval_diff(self) -> float:
        return relative_difference(self.det_evals, self.stoch_evals)

    def cells(self) -> list[str]:
        return [
            self.road,
            f"#{self.run}",
            thousands(self.det_cost),
            thousands(self.stoch_cost),
            percent(self.cost_diff, signed=True),
            thousands(self.det_evals),
            thousands(self.stoch_evals),
            percent(self.eval_diff, signed=True),
        ]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["cost_diff_percent"] = self.cost_diff
        d["eval_diff_percent"] = self.eval_diff
        return d


def compare(det: OptimizationReport, stochastic: Sequence[OptimizationReport],
            road: str | None = None) -> list[ComparisonRow]:
    """One row per stochastic run, each measured against the deterministic run."""
    name = road if road is not None else (det.name or "road")
    return [
        ComparisonRow(name, k, det.optimized_cost, s.optimized_cost, det.evaluations, s.evaluations)
        for k, s in enumerate(stochastic, start=1)
    ]


def comparison_table(rows: Iterable[ComparisonRow]) -> str:
    return format_table(COMPARISON_COLUMNS, [r.cells() for r in rows])


@dataclass(frozen=True)
class SweepRow:
    tolerance: float
    det_wins: int
    stoch_wins: int
    ties: int

    def cells(self) -> list[str]:
        tol = f"{self.tolerance:g}"
        return [f"+/-{tol}%", str(self.det_wins), str(self.stoch_wins), str(self.ties)]


def win_tie_counts(diffs: Sequence[float], tolerances: Sequence[float] = TOLERANCES,
                   decimals: int | None = 1) -> list[SweepRow]:
    """Count wins and ties of signed cost differences at each tolerance.

    A difference within ``[-x, +x]`` (inclusive) is a tie; beyond ``+x``
    the stochastic solver wins, below ``-x`` the deterministic one does.
    Differences are first rounded to ``decimals`` places, as they appear in
    the comparison table; pass ``None`` to count raw values.
    """
    vals = [round(d, decimals) if decimals is not None else d for d in diffs]
    out = []
    for x in tolerances:
        ties = sum(1 for d in vals if -x <= d <= x)
        stoch = sum(1 for d in vals if d > x)
        det = sum(1 for d in vals if d < -x)
        out.append(SweepRow(float(x), det, stoch, ties))
    return out


def sweep_table(rows: Iterable[SweepRow]) -> str:
    return format_table(SWEEP_COLUMNS, [r.cells() for r in rows])


def to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def summary_csv(reports: Iterable[OptimizationReport]) -> str:
    rows = [
        [run_label(r), r.initial_cost, r.optimized_cost, round(r.improvement, 6),
         r.evaluations, round(r.wall_clock, 6)]
        for r in reports
    ]
    return to_csv(SUMMARY_COLUMNS, rows)


def comparison_csv(rows: Iterable[ComparisonRow]) -> str:
    return to_csv(
        COMPARISON_COLUMNS,
        [[r.road, r.run, r.det_cost, r.stoch_cost, round(r.cost_diff, 6),
          r.det_evals, r.stoch_evals, round(r.eval_diff, 6)] for r in rows],
    )


def sweep_csv(rows: Iterable[SweepRow]) -> str:
    return to_csv(SWEEP_COLUMNS, [[r.tolerance, r.det_wins, r.stoch_wins, r.ties] for r in rows])


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False)
