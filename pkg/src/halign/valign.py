"""Vertical alignment with earthwork allocation, as a linear program.

For a fixed horizontal alignment every station gives one earthwork section
with chainage ``s_i`` and ground elevation ``h_i``.  The road profile is a
C1 quadratic spline; the gap ``u_i = P(s_i) - h_i`` turns into cut or fill
volume, and material is hauled between neighbouring sections or exchanged
with borrow/waste pits.  This is the single-period continuous relaxation of
the quasi-network-flow model (no block or side-slope binaries).

Each spline segment is stored in a normalised local coordinate
``xi = (s - s_start) / L`` so the LP stays well scaled:
``P_g(s) = a1 + a2 * xi + a3 * xi**2``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .lp import INFEASIBLE, OPTIMAL, LinearProgram, LPResult, solve_lp

log = logging.getLogger(__name__)


class VAlignConfigError(ValueError):
    pass


class VAlignInfeasible(Exception):
    """The inner LP has no feasible vertical alignment."""


@dataclass(frozen=True)
class Pit:
    at: int
    cost: float
    cap: float

    def to_dict(self) -> dict:
        return {"at": self.at, "cost": self.cost, "cap": self.cap}


_CONFIG_KEYS = {"segments", "knots", "g_lo", "g_hi", "p", "q", "haul", "width",
                "borrow", "waste", "fix_ends"}
_PIT_KEYS = {"at", "cost", "cap"}


def _costs(value, name) -> float | tuple[float, ...]:
    if isinstance(value, (list, tuple)):
        out = tuple(float(v) for v in value)
        if any(v < 0 for v in out):
            raise VAlignConfigError(f"valign.{name}: negative unit cost")
        return out
    v = float(value)
    if v < 0:
        raise VAlignConfigError(f"valign.{name}: negative unit cost")
    return v


@dataclass(frozen=True)
class VAlignConfig:
    """Design parameters of the inner problem.

    ``p``/``q`` are unit cut/fill costs, either one value for all sections or
    one per section.  ``haul`` is the cost of moving one m^3 across one
    section-to-section arc.  Pit ``cost`` is the per-m^3 access haul cost.
    """

    g_lo: float = -0.1
    g_hi: float = 0.1
    p: float | tuple[float, ...] = 1.0
    q: float | tuple[float, ...] = 1.0
    haul: float = 0.1
    width: float = 8.0
    borrow: tuple[Pit, ...] = ()
    waste: tuple[Pit, ...] = ()
    segments: int | None = None
    knots: tuple[int, ...] | None = None
    fix_ends: bool = False

    def __post_init__(self):
        if not self.g_lo < self.g_hi:
            raise VAlignConfigError(f"g_lo={self.g_lo} must be below g_hi={self.g_hi}")
        if self.haul < 0 or self.width < 0:
            raise VAlignConfigError("haul cost and road width must be nonnegative")
        for pit in self.borrow + self.waste:
            if pit.cost < 0 or pit.cap < 0:
                raise VAlignConfigError(f"pit at section {pit.at}: negative cost or capacity")
        if self.segments is not None and self.segments < 1:
            raise VAlignConfigError("segments must be >= 1")
        if self.segments is not None and self.knots is not None:
            raise VAlignConfigError("give either segments or knots, not both")

    # -- per-section views -------------------------------------------------
    def cut_costs(self, n: int) -> np.ndarray:
        return self._per_section(self.p, n, "p")

    def fill_costs(self, n: int) -> np.ndarray:
        return self._per_section(self.q, n, "q")

    @staticmethod
    def _per_section(value, n, name):
        if isinstance(value, tuple):
            if len(value) != n:
                raise VAlignConfigError(f"valign.{name} has {len(value)} entries for {n} sections")
            return np.asarray(value, dtype=float)
        return np.full(n, float(value))

    def knot_indices(self, n: int) -> tuple[int, ...]:
        """Station indices bounding the spline segments (shared at joins)."""
        if n < 2:
            raise VAlignConfigError("need at least two sections")
        if self.knots is not None:
            k = tuple(self.knots)
            if k[0] != 0 or k[-1] != n - 1 or any(b <= a for a, b in zip(k, k[1:])):
                raise VAlignConfigError(
                    f"knots {list(k)} must increase strictly from 0 to {n - 1}")
            return k
        g = self.segments if self.segments is not None else max(1, round((n - 1) / 10))
        g = min(g, n - 1)
        return tuple(int(v) for v in np.round(np.linspace(0, n - 1, g + 1)))

    def validate_for(self, n: int) -> None:
        self.knot_indices(n)
        p, q = self.cut_costs(n), self.fill_costs(n)
        if np.any(p + q <= 0):
            raise VAlignConfigError("p + q must be strictly positive at every section")
        for pit in self.borrow + self.waste:
            if not 0 <= pit.at < n:
                raise VAlignConfigError(f"pit access section {pit.at} outside 0..{n - 1}")

    # -- serialisation -----------------------------------------------------
    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "VAlignConfig":
        unknown = set(d) - _CONFIG_KEYS
        if unknown:
            raise VAlignConfigError(f"valign: unknown key(s) {sorted(unknown)}")

        def pits(key):
            out = []
            for k, item in enumerate(d.get(key, [])):
                bad = set(item) - _PIT_KEYS
                if bad:
                    raise VAlignConfigError(f"valign.{key}[{k}]: unknown key(s) {sorted(bad)}")
                try:
                    out.append(Pit(int(item["at"]), float(item["cost"]), float(item["cap"])))
                except KeyError as exc:
                    raise VAlignConfigError(f"valign.{key}[{k}]: missing {exc.args[0]!r}") from None
            return tuple(out)

        kw: dict[str, Any] = {}
        for key in ("g_lo", "g_hi", "haul", "width"):
            if key in d:
                kw[key] = float(d[key])
        for key in ("p", "q"):
            if key in d:
                kw[key] = _costs(d[key], key)
        if "segments" in d:
            kw["segments"] = int(d["segments"])
        if "knots" in d:
            kw["knots"] = tuple(int(v) for v in d["knots"])
        if "fix_ends" in d:
            kw["fix_ends"] = bool(d["fix_ends"])
        kw["borrow"] = pits("borrow")
        kw["waste"] = pits("waste")
        return cls(**kw)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "g_lo": self.g_lo,
            "g_hi": self.g_hi,
            "p": list(self.p) if isinstance(self.p, tuple) else self.p,
            "q": list(self.q) if isinstance(self.q, tuple) else self.q,
            "haul": self.haul,
            "width": self.width,
            "borrow": [p.to_dict() for p in self.borrow],
            "waste": [p.to_dict() for p in self.waste],
            "fix_ends": self.fix_ends,
        }
        if self.segments is not None:
            d["segments"] = self.segments
        if self.knots is not None:
            d["knots"] = list(self.knots)
        return d


@dataclass(frozen=True)
class VAlignProblem:
    chainage: np.ndarray
    ground: np.ndarray
    config: VAlignConfig

    def __post_init__(self):
        s = np.asarray(self.chainage, dtype=float)
        h = np.asarray(self.ground, dtype=float)
        object.__setattr__(self, "chainage", s)
        object.__setattr__(self, "ground", h)
        if s.shape != h.shape or s.ndim != 1:
            raise ValueError("chainage and ground must be 1-D arrays of equal length")
        if len(s) < 2:
            raise ValueError("need at least two sections")
        if np.any(np.diff(s) <= 0):
            raise ValueError("section chainages must be strictly increasing")
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(h))):
            raise ValueError("non-finite chainage or ground elevation")
        self.config.validate_for(len(s))

    @property
    def n(self) -> int:
        return len(self.chainage)

    def tributary_lengths(self) -> np.ndarray:
        """Half the distance to each neighbouring section."""
        gaps = np.diff(self.chainage)
        ell = np.zeros(self.n)
        ell[:-1] += gaps / 2
        ell[1:] += gaps / 2
        return ell


@dataclass(frozen=True)
class _Layout:
    """Column offsets of each variable block in the assembled LP."""

    n: int
    g: int
    nb: int
    nw: int

    @property
    def a(self):  # spline coefficients, 3 per segment
        return 0

    @property
    def u(self):
        return 3 * self.g

    @property
    def vp(self):
        return self.u + self.n

    @property
    def vm(self):
        return self.vp + self.n

    @property
    def fr(self):  # i -> i+1
        return self.vm + self.n

    @property
    def fl(self):  # i+1 -> i
        return self.fr + self.n - 1

    @property
    def fb(self):  # borrow pit -> access section
        return self.fl + self.n - 1

    @property
    def fw(self):  # access section -> waste pit
        return self.fb + self.nb

    @property
    def pb(self):  # borrow pit volume
        return self.fw + self.nw

    @property
    def pw(self):  # waste pit volume
        return self.pb + self.nb

    @property
    def size(self):
        return self.pw + self.nw


@dataclass
class AssembledLP:
    lp: LinearProgram
    layout: _Layout
    knots: tuple[int, ...]
    row_groups: dict[str, slice]


@dataclass
class VAlignSolution:
    knot_chainage: np.ndarray        # segment boundaries, length g+1
    coefficients: np.ndarray         # (g, 3) local coefficients
    offsets: np.ndarray              # u_i
    cut: np.ndarray                  # V_i^+
    fill: np.ndarray                 # V_i^-
    flow_forward: np.ndarray         # i -> i+1
    flow_backward: np.ndarray        # i+1 -> i
    borrow_flow: np.ndarray
    waste_flow: np.ndarray
    borrow_volume: np.ndarray
    waste_volume: np.ndarray
    cost: float
    lp_iterations: int = 0
    extra: dict = field(default_factory=dict)

    def segment_of(self, s: np.ndarray) -> np.ndarray:
        k = np.searchsorted(self.knot_chainage, s, side="right") - 1
        return np.clip(k, 0, len(self.coefficients) - 1)

    def elevation(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        g = self.segment_of(s)
        s0 = self.knot_chainage[g]
        L = self.knot_chainage[g + 1] - s0
        xi = (s - s0) / L
        a = self.coefficients[g]
        return a[..., 0] + a[..., 1] * xi + a[..., 2] * xi**2

    def grade(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        g = self.segment_of(s)
        s0 = self.knot_chainage[g]
        L = self.knot_chainage[g + 1] - s0
        xi = (s - s0) / L
        a = self.coefficients[g]
        return (a[..., 1] + 2 * a[..., 2] * xi) / L

    def global_coefficients(self) -> np.ndarray:
        """Coefficients of ``a1 + a2*s + a3*s**2`` per segment, in chainage."""
        s0 = self.knot_chainage[:-1]
        L = np.diff(self.knot_chainage)
        a1, a2, a3 = self.coefficients.T
        return np.column_stack([
            a1 - a2 * s0 / L + a3 * s0**2 / L**2,
            a2 / L - 2 * a3 * s0 / L**2,
            a3 / L**2,
        ])

    def summary(self) -> dict[str, Any]:
        return {
            "cost": self.cost,
            "cut_volume": float(self.cut.sum()),
            "fill_volume": float(self.fill.sum()),
            "borrow_volume": float(self.borrow_volume.sum()),
            "waste_volume": float(self.waste_volume.sum()),
            "haul_volume": float(self.flow_forward.sum() + self.flow_backward.sum()),
            "max_abs_offset": float(np.abs(self.offsets).max(initial=0.0)),
            "segments": int(len(self.coefficients)),
        }


def assemble(problem: VAlignProblem) -> AssembledLP:
    """Build the LP for ``problem``; see the module docstring for the model."""
    cfg = problem.config
    n = problem.n
    s, h = problem.chainage, problem.ground
    knots = cfg.knot_indices(n)
    g = len(knots) - 1
    lay = _Layout(n, g, len(cfg.borrow), len(cfg.waste))
    ell = problem.tributary_lengths()
    knot_s = s[list(knots)]
    seg_len = np.diff(knot_s)

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    senses: list[str] = []
    rhs: list[float] = []
    groups: dict[str, slice] = {}

    def row(entries, sense, b):
        r = len(rhs)
        for c, v in entries:
            if v != 0.0:
                rows.append(r)
                cols.append(c)
                vals.append(v)
        senses.append(sense)
        rhs.append(b)

    def group(name, start):
        groups[name] = slice(start, len(rhs))

    # segment of each section: knot stations go to the later segment
    seg = np.clip(np.searchsorted(np.asarray(knots), np.arange(n), side="right") - 1, 0, g - 1)

    # offset definition  P(s_i) - u_i = h_i
    start = len(rhs)
    for i in range(n):
        k = seg[i]
        xi = (s[i] - knot_s[k]) / seg_len[k]
        base = lay.a + 3 * k
        row([(base, 1.0), (base + 1, xi), (base + 2, xi * xi), (lay.u + i, -1.0)], "=", h[i])
    group("offset", start)

    # C1 smoothness at interior knots: end of segment k-1 meets start of k
    start = len(rhs)
    for k in range(1, g):
        prev, cur = lay.a + 3 * (k - 1), lay.a + 3 * k
        row([(prev, 1.0), (prev + 1, 1.0), (prev + 2, 1.0), (cur, -1.0)], "=", 0.0)
        # slopes: (a2 + 2 a3)/L_prev = a2'/L_cur, scaled by L_prev
        ratio = seg_len[k - 1] / seg_len[k]
        row([(prev + 1, 1.0), (prev + 2, 2.0), (cur + 1, -ratio)], "=", 0.0)
    group("smooth", start)

    # grade bounds at both ends of every segment: G_L*L <= a2 + 2 a3 xi <= G_U*L
    start = len(rhs)
    for k in range(g):
        base = lay.a + 3 * k
        for xi in (0.0, 1.0):
            row([(base + 1, 1.0), (base + 2, 2.0 * xi)], ">=", cfg.g_lo * seg_len[k])
            row([(base + 1, 1.0), (base + 2, 2.0 * xi)], "<=", cfg.g_hi * seg_len[k])
    group("grade", start)

    # signed volume  V+ - V- + w*ell*u = 0
    start = len(rhs)
    for i in range(n):
        row([(lay.vp + i, 1.0), (lay.vm + i, -1.0), (lay.u + i, cfg.width * ell[i])], "=", 0.0)
    group("volume", start)

    # conservation of material at each section: sources - sinks = 0
    start = len(rhs)
    for i in range(n):
        e = [(lay.vp + i, 1.0), (lay.vm + i, -1.0)]
        if i > 0:
            e += [(lay.fr + i - 1, 1.0), (lay.fl + i - 1, -1.0)]
        if i < n - 1:
            e += [(lay.fl + i, 1.0), (lay.fr + i, -1.0)]
        for j, pit in enumerate(cfg.borrow):
            if pit.at == i:
                e.append((lay.fb + j, 1.0))
        for j, pit in enumerate(cfg.waste):
            if pit.at == i:
                e.append((lay.fw + j, -1.0))
        row(e, "=", 0.0)
    group("conservation", start)

    # pit volume balance
    start = len(rhs)
    for j in range(lay.nb):
        row([(lay.pb + j, 1.0), (lay.fb + j, -1.0)], "=", 0.0)
    for j in range(lay.nw):
        row([(lay.pw + j, 1.0), (lay.fw + j, -1.0)], "=", 0.0)
    group("pits", start)

    start = len(rhs)
    if cfg.fix_ends:
        row([(lay.u, 1.0)], "=", 0.0)
        row([(lay.u + n - 1, 1.0)], "=", 0.0)
    group("fixed", start)

    cost = np.zeros(lay.size)
    cost[lay.vp : lay.vp + n] = cfg.cut_costs(n)
    cost[lay.vm : lay.vm + n] = cfg.fill_costs(n)
    cost[lay.fr : lay.fb] = cfg.haul
    cost[lay.fb : lay.fw] = [p.cost for p in cfg.borrow]
    cost[lay.fw : lay.pb] = [p.cost for p in cfg.waste]

    lower = np.zeros(lay.size)
    lower[: lay.vp] = -np.inf
    upper = np.full(lay.size, np.inf)
    upper[lay.pb : lay.pw] = [p.cap for p in cfg.borrow]
    upper[lay.pw : lay.size] = [p.cap for p in cfg.waste]

    lp = LinearProgram(
        cost=cost,
        rows=np.asarray(rows, dtype=int),
        cols=np.asarray(cols, dtype=int),
        vals=np.asarray(vals, dtype=float),
        senses=tuple(senses),
        rhs=np.asarray(rhs, dtype=float),
        lower=lower,
        upper=upper,
    )
    return AssembledLP(lp, lay, knots, groups)


def _unpack(problem: VAlignProblem, asm: AssembledLP, res: LPResult) -> VAlignSolution:
    lay, x = asm.layout, res.x
    n = lay.n
    return VAlignSolution(
        knot_chainage=problem.chainage[list(asm.knots)],
        coefficients=x[: 3 * lay.g].reshape(lay.g, 3).copy(),
        offsets=x[lay.u : lay.u + n].copy(),
        cut=x[lay.vp : lay.vp + n].copy(),
        fill=x[lay.vm : lay.vm + n].copy(),
        flow_forward=x[lay.fr : lay.fr + n - 1].copy(),
        flow_backward=x[lay.fl : lay.fl + n - 1].copy(),
        borrow_flow=x[lay.fb : lay.fb + lay.nb].copy(),
        waste_flow=x[lay.fw : lay.fw + lay.nw].copy(),
        borrow_volume=x[lay.pb : lay.pb + lay.nb].copy(),
        waste_volume=x[lay.pw : lay.pw + lay.nw].copy(),
        cost=res.objective,
        lp_iterations=res.iterations,
    )


def valign_cost(problem: VAlignProblem) -> tuple[float, VAlignSolution]:
    """Optimal vertical-alignment cost and the solution attaining it.

    Raises :class:`VAlignInfeasible` when no profile satisfies the grade,
    smoothness and fixed-end constraints with the available pits.
    """
    # elevations enter only through the offset rows, so shifting the ground by
    # its mean and the profile by the same amount leaves the LP equivalent;
    # centred data keeps the tableau well scaled and flat ground exactly zero
    shift = float(np.mean(problem.ground))
    centred = VAlignProblem(problem.chainage, problem.ground - shift, problem.config)
    asm = assemble(centred)
    res = solve_lp(asm.lp)
    if res.status == INFEASIBLE:
        raise VAlignInfeasible("no vertical alignment satisfies the constraints")
    if res.status != OPTIMAL:
        # costs are nonnegative, so this signals a modelling bug
        raise RuntimeError(f"inner LP returned status {res.status!r}")
    sol = _unpack(problem, asm, res)
    sol.coefficients[:, 0] += shift
    return sol.cost, sol


def solution_residuals(problem: VAlignProblem, sol: VAlignSolution) -> dict[str, float]:
    """Residuals of every structural identity a returned optimum must satisfy."""
    cfg = problem.config
    s, h = problem.chainage, problem.ground
    ell = problem.tributary_lengths()
    out: dict[str, float] = {}

    out["offset"] = float(np.max(np.abs(sol.elevation(s) - h - sol.offsets)))

    ks = sol.knot_chainage
    L = np.diff(ks)
    a = sol.coefficients
    smooth = [0.0]
    for k in range(1, len(a)):
        end_val = a[k - 1].sum()
        end_slope = (a[k - 1, 1] + 2 * a[k - 1, 2]) / L[k - 1]
        smooth.append(abs(end_val - a[k, 0]))
        smooth.append(abs(end_slope - a[k, 1] / L[k]))
    out["smoothness"] = float(max(smooth))

    ends = np.concatenate([a[:, 1] / L, (a[:, 1] + 2 * a[:, 2]) / L])
    out["grade"] = float(max(np.max(cfg.g_lo - ends), np.max(ends - cfg.g_hi), 0.0))

    out["volume"] = float(np.max(np.abs(sol.cut - sol.fill - cfg.width * ell * (h - sol.elevation(s)))))
    out["nonnegativity"] = float(max(0.0, -min(
        sol.cut.min(), sol.fill.min(),
        sol.flow_forward.min(initial=0.0), sol.flow_backward.min(initial=0.0),
        sol.borrow_flow.min(initial=0.0), sol.waste_flow.min(initial=0.0))))

    net = sol.cut - sol.fill
    net[1:] += sol.flow_forward - sol.flow_backward
    net[:-1] += sol.flow_backward - sol.flow_forward
    for j, pit in enumerate(cfg.borrow):
        net[pit.at] += sol.borrow_flow[j]
    for j, pit in enumerate(cfg.waste):
        net[pit.at] -= sol.waste_flow[j]
    out["conservation"] = float(np.max(np.abs(net)))

    pit_res = [0.0]
    pit_res += list(np.abs(sol.borrow_volume - sol.borrow_flow))
    pit_res += list(np.abs(sol.waste_volume - sol.waste_flow))
    caps_b = np.array([p.cap for p in cfg.borrow])
    caps_w = np.array([p.cap for p in cfg.waste])
    pit_res += list(np.maximum(sol.borrow_volume - caps_b, 0.0))
    pit_res += list(np.maximum(sol.waste_volume - caps_w, 0.0))
    out["pit_balance"] = float(max(pit_res))

    out["mass_balance"] = float(abs(
        sol.cut.sum() + sol.borrow_flow.sum() - sol.fill.sum() - sol.waste_flow.sum()))
    if cfg.fix_ends:
        out["fixed_ends"] = float(max(abs(sol.offsets[0]), abs(sol.offsets[-1])))
    return out
