"""Pattern-search solvers for black-box objectives with an extreme barrier.

Both solvers follow the classic scheme: poll ``x + d`` for every direction
in a pattern whose largest step equals the mesh size; move on improvement
and keep the mesh, otherwise shrink it by ``gamma``.  They stop once the
mesh falls below ``min_step`` or the evaluation budget is spent.

Infeasible points carry no cost and are never accepted.
"""
from __future__ import annotations

import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Evaluation:
    """Outcome of one black-box call; ``cost is None`` means infeasible."""

    cost: float | None
    inner_skipped: bool = False
    info: Any = None

    @property
    def feasible(self) -> bool:
        return self.cost is not None


BlackBox = Callable[[np.ndarray], "Evaluation | float"]


def _as_evaluation(value) -> Evaluation:
    if isinstance(value, Evaluation):
        return value
    v = float(value)
    if math.isfinite(v):
        return Evaluation(v)
    return Evaluation(None, inner_skipped=True)


class InfeasibleStart(ValueError):
    pass


@dataclass(frozen=True)
class SearchConfig:
    delta0: float = 8.0
    gamma: float = 0.5
    min_step: float = 0.1
    max_evals: int = 20_000
    scale: tuple[float, ...] | None = None  # per-coordinate step multipliers
    seed: int = 0
    workers: int = 1
    k_restart: int = 5      # random perturbations tried per stall (stochastic)
    max_escapes: int = 5    # stall escapes allowed per run (stochastic)
    escape_radius: float = 5.0  # in multiples of min_step
    extra_directions: int = 2
    # a candidate replaces the incumbent only if it beats it by this fraction
    # of |f|; filters LP round-off and creeping moves along flat ridges
    rel_decrease: float = 1e-6

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if not self.min_step > 0:
            raise ValueError("min_step must be positive")
        if not self.delta0 > 0:
            raise ValueError("delta0 must be positive")
        if self.max_evals < 1:
            raise ValueError("max_evals must be >= 1")
        if not 0 <= self.rel_decrease < 1:
            raise ValueError("rel_decrease must lie in [0, 1)")

    def threshold(self, fx: float) -> float:
        """Costs strictly below this value count as an improvement on ``fx``."""
        return fx - self.rel_decrease * abs(fx)

    def scales(self, d: int) -> np.ndarray:
        if self.scale is None:
            return np.ones(d)
        s = np.asarray(self.scale, dtype=float)
        if s.shape != (d,) or np.any(s <= 0):
            raise ValueError(f"scale must hold {d} positive entries")
        return s


@dataclass
class RunResult:
    x: np.ndarray
    cost: float
    evaluations: int
    inner_solves: int
    cache_hits: int
    trace: list[tuple[int, float]]
    reason: str
    final_delta: float
    iterations: int
    solver: str
    seed: int | None = None
    escapes: int = 0

    def to_dict(self) -> dict:
        return {
            "x": [float(v) for v in self.x],
            "cost": self.cost,
            "evaluations": self.evaluations,
            "inner_solves": self.inner_solves,
            "cache_hits": self.cache_hits,
            "trace": [[k, c] for k, c in self.trace],
            "reason": self.reason,
            "final_delta": self.final_delta,
            "iterations": self.iterations,
            "solver": self.solver,
            "seed": self.seed,
            "escapes": self.escapes,
        }


class CachedBlackBox:
    """Counts calls to ``f`` and memoises them by the exact bytes of ``x``."""

    def __init__(self, f: BlackBox, workers: int = 1):
        self.f = f
        self.workers = workers
        self.cache: dict[bytes, Evaluation] = {}
        self.evaluations = 0
        self.inner_solves = 0
        self.cache_hits = 0
        self._lock = threading.Lock()

    def _call(self, x: np.ndarray) -> Evaluation:
        return _as_evaluation(self.f(x.copy()))

    def batch(self, xs: list[np.ndarray]) -> list[Evaluation]:
        """Evaluate ``xs``; bookkeeping follows list order whatever the workers do."""
        keys = [np.ascontiguousarray(x, dtype=float).tobytes() for x in xs]
        todo: list[int] = []
        seen: set[bytes] = set()
        with self._lock:
            for k, key in enumerate(keys):
                if key not in self.cache and key not in seen:
                    todo.append(k)
                    seen.add(key)
        if self.workers > 1 and len(todo) > 1:
            with ThreadPoolExecutor(self.workers) as pool:
                fresh = list(pool.map(self._call, [xs[k] for k in todo]))
        else:
            fresh = [self._call(xs[k]) for k in todo]
        with self._lock:
            for k, ev in zip(todo, fresh):
                self.cache[keys[k]] = ev
                self.evaluations += 1
                if not ev.inner_skipped:
                    self.inner_solves += 1
            self.cache_hits += len(xs) - len(todo)
            return [self.cache[key] for key in keys]

    def __call__(self, x: np.ndarray) -> Evaluation:
        return self.batch([x])[0]


def poll_set(x: np.ndarray, delta: float, mode: str = "det",
             rng: np.random.Generator | None = None,
             scale: np.ndarray | None = None, extra: int = 2) -> np.ndarray:
    """Candidate points around ``x`` with largest scaled step exactly ``delta``.

    ``"det"`` gives the 2d signed coordinate steps in a fixed order
    (+e1, -e1, +e2, ...).  ``"stoch"`` shuffles those and adds ``extra``
    random directions, each normalised to the same scaled infinity norm.
    """
    x = np.asarray(x, dtype=float)
    d = x.size
    s = np.ones(d) if scale is None else np.asarray(scale, dtype=float)
    dirs = np.zeros((2 * d, d))
    for j in range(d):
        dirs[2 * j, j] = 1.0
        dirs[2 * j + 1, j] = -1.0
    if mode == "stoch":
        if rng is None:
            raise ValueError("stochastic polling needs a random generator")
        z = rng.standard_normal((extra, d))
        z /= np.abs(z).max(axis=1, keepdims=True)
        dirs = rng.permutation(np.vstack([dirs, z]))
    elif mode != "det":
        raise ValueError(f"unknown poll mode {mode!r}")
    return x + delta * dirs * s


def _start(f: CachedBlackBox, x0) -> tuple[np.ndarray, float]:
    x = np.array(x0, dtype=float)
    ev = f(x)
    if not ev.feasible:
        raise InfeasibleStart("the starting point is infeasible")
    return x, float(ev.cost)


def pattern_search_deterministic(f: BlackBox, x0, cfg: SearchConfig = SearchConfig()) -> RunResult:
    """Complete-poll coordinate search; bit-reproducible, serial or threaded."""
    bb = CachedBlackBox(f, cfg.workers)
    x, fx = _start(bb, x0)
    scale = cfg.scales(x.size)
    trace = [(bb.evaluations, fx)]
    delta = cfg.delta0
    last_delta = delta
    it = 0
    reason = "min_step"
    while True:
        if delta < cfg.min_step:
            break
        budget = cfg.max_evals - bb.evaluations
        if budget <= 0:
            reason = "max_evals"
            break
        cands = list(poll_set(x, delta, "det", scale=scale))
        evs = bb.batch(cands[:budget])
        it += 1
        best_k, best_c = -1, cfg.threshold(fx)
        for k, ev in enumerate(evs):
            if ev.feasible and ev.cost < best_c:
                best_k, best_c = k, ev.cost
        last_delta = delta
        if best_k >= 0:
            x, fx = cands[best_k], best_c
            trace.append((bb.evaluations, fx))
        else:
            delta *= cfg.gamma
    return RunResult(x, fx, bb.evaluations, bb.inner_solves, bb.cache_hits, trace,
                     reason, last_delta, it, "det")


def pattern_search_stochastic(f: BlackBox, x0, cfg: SearchConfig = SearchConfig(),
                              seed: int | None = None) -> RunResult:
    """Opportunistic search over randomised poll sets with a stall escape.

    On stalling below ``min_step`` the incumbent is perturbed ``k_restart``
    times at ``escape_radius * min_step``; the best perturbation is taken if
    it improves and the search resumes from that radius.  At most
    ``max_escapes`` escapes are made, so the heuristic fires finitely often.
    """
    seed = cfg.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    bb = CachedBlackBox(f, 1)
    x, fx = _start(bb, x0)
    scale = cfg.scales(x.size)
    trace = [(bb.evaluations, fx)]
    delta = cfg.delta0
    last_delta = delta
    it = 0
    escapes = 0
    reason = "min_step"
    while True:
        if bb.evaluations >= cfg.max_evals:
            reason = "max_evals"
            break
        if delta < cfg.min_step:
            if escapes >= cfg.max_escapes:
                break
            radius = cfg.escape_radius * cfg.min_step
            z = rng.uniform(-1.0, 1.0, (cfg.k_restart, x.size))
            z /= np.abs(z).max(axis=1, keepdims=True)
            cands = list(x + radius * z * scale)
            cands = cands[: cfg.max_evals - bb.evaluations]
            evs = bb.batch(cands)
            escapes += 1
            best_k, best_c = -1, cfg.threshold(fx)
            for k, ev in enumerate(evs):
                if ev.feasible and ev.cost < best_c:
                    best_k, best_c = k, ev.cost
            if best_k < 0:
                break
            x, fx = cands[best_k], best_c
            trace.append((bb.evaluations, fx))
            delta = radius
            continue
        it += 1
        last_delta = delta
        moved = False
        for cand in poll_set(x, delta, "stoch", rng=rng, scale=scale, extra=cfg.extra_directions):
            if bb.evaluations >= cfg.max_evals:
                break
            ev = bb(cand)
            if ev.feasible and ev.cost < cfg.threshold(fx):
                x, fx = cand, ev.cost
                trace.append((bb.evaluations, fx))
                moved = True
                break
        if not moved:
            delta *= cfg.gamma
    return RunResult(x, fx, bb.evaluations, bb.inner_solves, bb.cache_hits, trace,
                     reason, last_delta, it, "stoch", seed=seed, escapes=escapes)


def run(f: BlackBox, x0, cfg: SearchConfig, solver: str = "det", seed: int | None = None) -> RunResult:
    if solver == "det":
        return pattern_search_deterministic(f, x0, cfg)
    if solver == "stoch":
        return pattern_search_stochastic(f, x0, cfg, seed)
    raise ValueError(f"unknown solver {solver!r}; expected 'det' or 'stoch'")
