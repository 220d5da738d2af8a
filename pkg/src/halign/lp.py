"""Dense two-phase simplex for small linear programs.

The solver works on a tableau and is meant for the desk-scale LPs built by
:mod:`halign.valign` (a few hundred variables).  It uses Dantzig pricing and
falls back to Bland's rule after a run of degenerate pivots, which guarantees
termination.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

FEAS_TOL = 1e-8
OPT_TOL = 1e-9
PIVOT_TOL = 1e-10
DEGENERATE_STREAK = 12
SNAP_TOL = 1e-11  # basic values this small (relative to |b|) are round-off


class LPError(RuntimeError):
    """Numerical breakdown of the simplex method (not infeasibility)."""


@dataclass(frozen=True)
class LinearProgram:
    """min c @ x subject to sparse rows and per-variable bounds.

    ``rows``, ``cols``, ``vals`` are the triplet form of the constraint
    matrix; ``senses`` holds one of ``"<="``, ``"="``, ``">="`` per row.
    Infinite bounds are given as ``-np.inf`` / ``np.inf``.
    """

    cost: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    senses: tuple[str, ...]
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        n, m = len(self.cost), len(self.rhs)
        if len(self.senses) != m:
            raise ValueError(f"{len(self.senses)} senses for {m} rows")
        if not (len(self.rows) == len(self.cols) == len(self.vals)):
            raise ValueError("triplet arrays differ in length")
        if len(self.lower) != n or len(self.upper) != n:
            raise ValueError("bounds do not match the number of variables")
        if len(self.rows) and (self.rows.min() < 0 or self.rows.max() >= m):
            raise ValueError("row index out of range")
        if len(self.cols) and (self.cols.min() < 0 or self.cols.max() >= n):
            raise ValueError("column index out of range")
        bad = set(self.senses) - {"<=", "=", ">="}
        if bad:
            raise ValueError(f"unknown row sense(s) {sorted(bad)}")
        for name in ("cost", "vals", "rhs"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"non-finite entries in {name}")
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)):
            raise ValueError("NaN bound")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound above upper bound")

    @property
    def n_vars(self) -> int:
        return len(self.cost)

    @property
    def n_rows(self) -> int:
        return len(self.rhs)

    def dense(self) -> np.ndarray:
        A = np.zeros((self.n_rows, self.n_vars))
        np.add.at(A, (self.rows, self.cols), self.vals)
        return A

    def residuals(self, x: np.ndarray) -> tuple[float, float]:
        """Largest row and bound violation of ``x``, each scaled by row size."""
        A = self.dense()
        ax = A @ x
        scale = 1.0 + np.abs(A).max(axis=1, initial=0.0) * (1.0 + np.abs(x).max(initial=0.0))
        viol = np.zeros(self.n_rows)
        for k, sense in enumerate(self.senses):
            d = ax[k] - self.rhs[k]
            if sense == "=":
                viol[k] = abs(d)
            elif sense == "<=":
                viol[k] = max(d, 0.0)
            else:
                viol[k] = max(-d, 0.0)
        row = float(np.max(viol / scale, initial=0.0))
        bnd = float(np.max(np.maximum(self.lower - x, x - self.upper), initial=0.0))
        return row, max(bnd, 0.0)


@dataclass
class LPResult:
    status: str
    x: np.ndarray | None = None
    objective: float = float("nan")
    iterations: int = 0
    # certificate in the internal standard form  min c_s y, A_s y = b_s, y >= 0
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    std_objective_gap: float = float("nan")
    extra: dict = field(default_factory=dict)


class _StandardForm:
    """x = offset + T @ y with y >= 0, and A_s y = b_s."""

    def __init__(self, lp: LinearProgram):
        n = lp.n_vars
        A = lp.dense()
        cols = []  # (orig var, sign)
        free = []  # y columns standing for the positive part of a free variable
        offset = np.zeros(n)
        extra_rows = []  # (var col in y, upper width)
        for j in range(n):
            lo, hi = lp.lower[j], lp.upper[j]
            if np.isfinite(lo):
                offset[j] = lo
                cols.append((j, 1.0))
                if np.isfinite(hi):
                    extra_rows.append((len(cols) - 1, hi - lo))
            elif np.isfinite(hi):
                offset[j] = hi
                cols.append((j, -1.0))
            else:
                free.append(len(cols))
                cols.append((j, 1.0))
                cols.append((j, -1.0))
        ny = len(cols)
        T = np.zeros((n, ny))
        for k, (j, s) in enumerate(cols):
            T[j, k] = s

        A_y = A @ T
        b = lp.rhs - A @ offset
        senses = list(lp.senses)
        rows = [A_y[k] for k in range(lp.n_rows)]
        rhs = list(b)
        for k, width in extra_rows:
            r = np.zeros(ny)
            r[k] = 1.0
            rows.append(r)
            rhs.append(width)
            senses.append("<=")

        m = len(rows)
        A_y = np.vstack(rows) if m else np.zeros((0, ny))
        b_s = np.asarray(rhs, dtype=float)
        # row equilibration on the structural part; slacks stay at +-1
        norms = np.abs(A_y).max(axis=1, initial=0.0)
        norms[norms == 0] = 1.0
        A_y = A_y / norms[:, None]
        b_s = b_s / norms

        n_slack = sum(1 for s in senses if s != "=")
        A_s = np.zeros((m, ny + n_slack))
        A_s[:, :ny] = A_y
        slack = ny
        for k, s in enumerate(senses):
            if s == "<=":
                A_s[k, slack] = 1.0
                slack += 1
            elif s == ">=":
                A_s[k, slack] = -1.0
                slack += 1

        self.lp = lp
        self.T = T
        self.offset = offset
        self.A = A_s
        self.b = b_s
        self.c = np.concatenate([T.T @ lp.cost, np.zeros(n_slack)])
        self.const = float(lp.cost @ offset)
        self.ny = ny
        self.free = np.zeros(ny + n_slack, dtype=bool)
        self.free[free] = True

    def recover(self, y: np.ndarray) -> np.ndarray:
        return self.offset + self.T @ y[: self.ny]


def _pivot(tab: np.ndarray, r: int, q: int) -> None:
    tab[r] /= tab[r, q]
    col = tab[:, q].copy()
    col[r] = 0.0
    tab -= np.outer(col, tab[r])
    tab[:, q] = 0.0
    tab[r, q] = 1.0


def _simplex(tab, basis, free_cols, max_iter, counter):
    """Minimize the objective stored in the last row of ``tab``.

    The last row holds reduced costs d_j of the structural columns and
    ``-z`` in the last column.  ``basis[k] >= n`` marks an artificial
    variable in row ``k``; artificials never re-enter.  Rows whose basic
    variable is free take any sign and are skipped by the ratio test.
    Returns "optimal" or "unbounded".
    """
    m = tab.shape[0] - 1
    n = tab.shape[1] - 1
    streak = 0
    while True:
        if counter[0] >= max_iter:
            raise LPError(f"iteration limit {max_iter} reached")
        d = tab[-1, :n]
        cand = np.flatnonzero(d < -OPT_TOL)
        if cand.size == 0:
            return OPTIMAL
        if streak >= DEGENERATE_STREAK:
            q = int(cand[0])  # Bland
        else:
            q = int(cand[np.argmin(d[cand])])
        bounded = basis >= n
        bounded[~bounded] = ~free_cols[basis[~bounded]]
        col = tab[:m, q]
        pos = (col > PIVOT_TOL) & bounded
        if not pos.any():
            return UNBOUNDED
        rhs = np.maximum(tab[:m, -1], 0.0)
        # Harris two-pass ratio test: relax each bound by FEAS_TOL, then pick
        # the largest pivot among rows that block within the relaxed step
        cp = col[pos]
        idx = np.flatnonzero(pos)
        step = ((rhs[idx] + FEAS_TOL) / cp).min()
        ratios = rhs[idx] / cp
        near = ratios <= step
        ties, tcol = idx[near], cp[near]
        if streak >= DEGENERATE_STREAK:
            big = tcol >= 1e-3 * tcol.max()
            ties = ties[big]
            r = int(ties[np.argmin(basis[ties])])
        else:
            r = int(ties[np.argmax(tcol)])
        streak = streak + 1 if rhs[r] / col[r] <= 1e-12 else 0
        _pivot(tab, r, q)
        basis[r] = q
        counter[0] += 1
        # round-off from degenerate pivots may leave tiny negative values
        v = tab[:m, -1]
        v[(v < 0) & (v > -FEAS_TOL) & bounded] = 0.0


def solve_lp(lp: LinearProgram, max_iter: int | None = None) -> LPResult:
    """Solve ``lp`` with the two-phase simplex method.

    Free variables are pivoted into the basis before phase one and stay
    there.  Returns an :class:`LPResult` whose ``status`` is ``"optimal"``,
    ``"infeasible"`` or ``"unbounded"``.  Raises :class:`LPError` on
    numerical breakdown or when the iteration cap is exceeded.
    """
    sf = _StandardForm(lp)
    A, b, c = sf.A.copy(), sf.b.copy(), sf.c
    m, n = A.shape
    free = sf.free
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000

    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    # reuse +1 slack columns as the starting basis where possible; the other
    # rows start on an artificial variable, recorded as basis index n + row
    basis = n + np.arange(m)
    for k in range(m):
        for j in np.flatnonzero(A[k, sf.ny :] == 1.0) + sf.ny:
            if np.count_nonzero(A[:, j]) == 1:
                basis[k] = j
                break
    tab = np.zeros((m + 1, n + 1))
    tab[:m, :n] = A
    tab[:m, -1] = b

    # crash: pivot each free column into a row still held by an artificial
    counter = [0]
    for j in np.flatnonzero(free):
        rows_art = np.flatnonzero(basis >= n)
        if rows_art.size == 0:
            break
        colj = np.abs(tab[rows_art, j])
        k = int(np.argmax(colj))
        if colj[k] <= 1e-9:
            continue
        r = int(rows_art[k])
        _pivot(tab, r, j)
        basis[r] = j
    # rows pushed negative by the crash restart on a fresh artificial
    for k in range(m):
        if tab[k, -1] < 0 and (basis[k] >= n or not free[basis[k]]):
            tab[k] *= -1.0
            basis[k] = n + k

    art = basis >= n
    if art.any():
        # phase one: minimize the sum of artificials
        tab[-1] = -tab[:m][art].sum(axis=0)
        _simplex(tab, basis, free, max_iter, counter)
        infeas = -tab[-1, -1]
        if infeas > FEAS_TOL * (1.0 + np.abs(b).max(initial=0.0)):
            return LPResult(INFEASIBLE, iterations=counter[0])
        # drive remaining artificials out of the basis; drop redundant rows
        keep = np.ones(m, dtype=bool)
        for k in range(m):
            if basis[k] >= n:
                row = tab[k, :n]
                j = np.flatnonzero(np.abs(row) > 1e-9)
                if j.size:
                    q = int(j[np.argmax(np.abs(row[j]))])
                    _pivot(tab, k, q)
                    basis[k] = q
                else:
                    keep[k] = False
        rows = np.flatnonzero(keep)
        tab = np.vstack([tab[rows], np.zeros((1, n + 1))])
        basis = basis[rows]
    else:
        rows = np.arange(m)
    m2 = len(basis)

    # phase two
    tab[-1, :n] = c
    tab[-1, -1] = 0.0
    for k in range(m2):
        if c[basis[k]] != 0.0:
            tab[-1] -= c[basis[k]] * tab[k]
    status = _simplex(tab, basis, free, max_iter, counter)
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED, iterations=counter[0])

    # recompute the basic solution from the original rows: the tableau has
    # accumulated round-off over many pivots, one dense solve has not
    A_kept, b_kept = A[rows], b[rows]
    B = A_kept[:, basis]
    try:
        y_b = np.linalg.solve(B, b_kept)
        duals = np.linalg.solve(B.T, c[basis])
    except np.linalg.LinAlgError as exc:
        raise LPError("singular final basis") from exc
    y = np.zeros(n)
    y[basis] = y_b
    y[np.abs(y) <= SNAP_TOL * (1.0 + np.abs(b_kept).max(initial=0.0))] = 0.0
    if np.any(y[~free] < -FEAS_TOL):
        raise LPError("negative basic variable after phase two")
    y[~free] = np.maximum(y[~free], 0.0)
    x = sf.recover(y)
    reduced = c - A_kept.T @ duals
    gap = abs(float(c @ y) - float(b_kept @ duals))

    objective = float(lp.cost @ x)
    return LPResult(
        OPTIMAL,
        x=x,
        objective=objective,
        iterations=counter[0],
        duals=duals,
        reduced_costs=reduced,
        std_objective_gap=gap,
    )
