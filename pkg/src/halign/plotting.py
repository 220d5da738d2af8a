"""Matplotlib figures written next to the tabular outputs of the CLI."""
from __future__ import annotations

import os
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .bilevel import OptimizationReport  # noqa: E402
from .geometry import Alignment, build_path  # noqa: E402
from .render import terrain_grid  # noqa: E402
from .report import SweepRow  # noqa: E402
from .terrain import Corridor  # noqa: E402
from .valign import VAlignProblem, VAlignSolution  # noqa: E402

LINESTYLES = ("-", "--", ":", "-.")


def _save(fig, path) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return str(path)


def plan_figure(corridor: Corridor, alignments: Sequence[tuple[str, Alignment]], path,
                levels: int = 12) -> str:
    """Plan view: filled terrain, corridor edges and every alignment."""
    xy, z = terrain_grid(corridor)
    fig, ax = plt.subplots(figsize=(10, 4))
    cs = ax.contourf(xy[..., 0], xy[..., 1], z, levels=levels, cmap="terrain")
    ax.contour(xy[..., 0], xy[..., 1], z, levels=levels, colors="k", linewidths=0.3, alpha=0.5)
    fig.colorbar(cs, ax=ax, label="ground elevation (m)", fraction=0.03, pad=0.02)
    left = np.array([st.left for st in corridor.stations])
    right = np.array([st.right for st in corridor.stations])
    ax.plot(left[:, 0], left[:, 1], color="0.3", lw=1)
    ax.plot(right[:, 0], right[:, 1], color="0.3", lw=1)
    for k, (label, a) in enumerate(alignments):
        pts = build_path(a).sample(0.5)
        ax.plot(pts[:, 0], pts[:, 1], LINESTYLES[k % len(LINESTYLES)], color="k" if k == 0 else f"C{k}",
                lw=1.6, label=label)
        ip = np.asarray(a.points)
        ax.plot(ip[:, 0], ip[:, 1], "o", ms=3, color="k" if k == 0 else f"C{k}", alpha=0.6)
    ax.set_aspect("equal")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    if alignments:
        ax.legend(loc="upper center", bbox_to_anchor=(0.5, -0.3), ncol=min(len(alignments), 6),
                  fontsize=8, frameon=False)
    return _save(fig, path)


def trace_figure(reports: Sequence[OptimizationReport], path) -> str:
    """Incumbent cost against evaluation count, one step line per run."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for k, r in enumerate(reports):
        if not r.trace:
            continue
        evals, costs = zip(*r.trace)
        evals = list(evals) + [r.evaluations]
        costs = list(costs) + [costs[-1]]
        label = r.solver if r.seed is None else f"{r.solver} seed {r.seed}"
        ax.step(evals, costs, where="post", label=label, lw=1.2)
    ax.set_xlabel("black-box evaluations")
    ax.set_ylabel("incumbent cost")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    return _save(fig, path)


def profile_figure(problem: VAlignProblem, solution: VAlignSolution, path) -> str:
    """Ground line and designed road profile along the chainage."""
    s = problem.chainage
    fine = np.linspace(s[0], s[-1], 400)
    fig, ax = plt.subplots(figsize=(8, 3.5))
    ax.plot(s, problem.ground, "o-", color="0.4", ms=3, lw=1, label="ground")
    ax.plot(fine, solution.elevation(fine), "k-", lw=1.5, label="road profile")
    for k in solution.knot_chainage[1:-1]:
        ax.axvline(k, color="0.8", lw=0.8, zorder=0)
    ax.set_xlabel("chainage (m)")
    ax.set_ylabel("elevation (m)")
    ax.legend(fontsize=8)
    return _save(fig, path)


def sweep_figure(rows: Sequence[SweepRow], path) -> str:
    """Stacked win/tie counts across the tolerance sweep."""
    tol = np.array([r.tolerance for r in rows])
    det = np.array([r.det_wins for r in rows])
    sto = np.array([r.stoch_wins for r in rows])
    tie = np.array([r.ties for r in rows])
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(tol, det, color="0.25", label="deterministic wins")
    ax.bar(tol, sto, bottom=det, color="0.6", label="stochastic wins")
    ax.bar(tol, tie, bottom=det + sto, color="0.9", edgecolor="0.5", label="ties")
    ax.set_xticks(tol)
    ax.set_xticklabels([f"±{t:g}%" for t in tol], fontsize=8)
    ax.set_ylabel("runs")
    ax.legend(fontsize=8)
    return _save(fig, path)
