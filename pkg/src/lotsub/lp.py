"""Dense-tableau LP solver with primal and dual solutions.

This backs the small structured LPs solved many thousands of times per
simulation run (stock-out determination and the coverage oracle behind the
cut separation), where per-call overhead matters more than asymptotics.
The pivot loop runs in the compiled extension when available and falls
back to the numpy twin otherwise; ``KERNEL`` names the one selected.

Dual sign convention (minimization): ``<=`` rows have dual <= 0, ``>=``
rows have dual >= 0, ``==`` rows are free, and at optimality
``objective == duals . rhs_contribution`` holds along with complementary
slackness.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

try:
    from . import _simplex as _kernel

    KERNEL = "compiled"
except ImportError:  # pragma: no cover - depends on build environment
    from . import _simplex_py as _kernel

    KERNEL = "python"

from . import _simplex_py

TOL_FEAS = 1e-7
TOL_GAP = 1e-6
_PIV_TOL = 1e-9

LE, EQ, GE = "<=", "==", ">="


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LpModel:
    """min c.x  s.t. rows (a, sense, rhs), bounds lo <= x <= hi.

    Row coefficients may be given dense (length n) or sparse as an
    (indices, values) pair; rows are normalized to the sparse form, which
    keeps the big scenario models affordable.
    """

    c: np.ndarray
    rows: list  # normalized to (indices, values, sense, rhs)
    lo: np.ndarray = None
    hi: np.ndarray = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.size
        self.lo = np.zeros(n) if self.lo is None else np.asarray(self.lo, dtype=float)
        self.hi = np.full(n, np.inf) if self.hi is None else np.asarray(self.hi, dtype=float)
        normalized = []
        for row in self.rows:
            if len(row) == 4:
                idx, val, sense, rhs = row
            else:
                a, sense, rhs = row
                if isinstance(a, tuple):
                    idx, val = a
                else:
                    a = np.asarray(a, dtype=float)
                    idx = np.flatnonzero(a)
                    val = a[idx]
            normalized.append(
                (
                    np.asarray(idx, dtype=np.int64),
                    np.asarray(val, dtype=float),
                    sense,
                    float(rhs),
                )
            )
        self.rows = normalized

    @property
    def n_vars(self):
        return self.c.size

    def row_dense(self, i):
        idx, val, _, _ = self.rows[i]
        a = np.zeros(self.n_vars)
        a[idx] = val
        return a

    def check(self):
        n = self.n_vars
        if self.lo.shape != (n,) or self.hi.shape != (n,):
            raise ValueError("bounds must have length n_vars")
        if np.any(self.lo > self.hi):
            raise ValueError("lower bound exceeds upper bound")
        if not np.all(np.isfinite(self.lo)):
            raise ValueError("lower bounds must be finite")
        for idx, val, sense, _ in self.rows:
            if idx.size != val.size:
                raise ValueError("sparse row index/value length mismatch")
            if idx.size and (idx.min() < 0 or idx.max() >= n):
                raise ValueError("row coefficient index out of range")
            if sense not in (LE, EQ, GE):
                raise ValueError(f"unknown sense {sense!r}")


@dataclass
class LpSolution:
    status: LpStatus
    x: np.ndarray = None
    duals: np.ndarray = None  # one per model row
    objective: float = np.nan
    iterations: int = 0

    @property
    def optimal(self):
        return self.status is LpStatus.OPTIMAL


def solve_lp(model: LpModel, kernel=None) -> LpSolution:
    """Two-phase dense simplex with a crash basis.

    Deterministic for identical input: entering variable is the most
    negative reduced cost (lowest index on ties), with a Bland's-rule
    switch after 5*(rows+cols) consecutive degenerate pivots.
    """
    model.check()
    run = (kernel or _kernel).run_simplex
    n = model.n_vars
    n_rows = len(model.rows)

    # shift variables so lower bounds become 0; finite upper bounds turn
    # into extra <= rows (kept separate from model rows for duals)
    shift = model.lo
    ub_rows = np.flatnonzero(np.isfinite(model.hi))
    m = n_rows + len(ub_rows)
    A = np.zeros((m, n))
    b = np.empty(m)
    senses = []
    for i, (idx, val, sense, rhs_i) in enumerate(model.rows):
        A[i, idx] = val
        senses.append(sense)
        b[i] = rhs_i - val @ shift[idx]
    for off, j in enumerate(ub_rows):
        A[n_rows + off, j] = 1.0
        senses.append(LE)
        b[n_rows + off] = model.hi[j] - shift[j]

    # slack columns: +1 for <=, -1 for >=
    slack_cols = [i for i in range(m) if senses[i] != EQ]
    n_slack = len(slack_cols)
    A_std = np.zeros((m, n + n_slack))
    A_std[:, :n] = A
    for sj, i in enumerate(slack_cols):
        A_std[i, n + sj] = 1.0 if senses[i] == LE else -1.0

    # make rhs nonnegative; flipping a row negates its dual
    flip = b < 0
    A_std[flip] *= -1.0
    b = np.abs(b)

    n_total = n + n_slack
    basis = np.full(m, -1, dtype=np.int64)
    used = np.zeros(n_total, dtype=bool)

    # crash: rows whose slack survived the flip start with that slack basic
    for sj, i in enumerate(slack_cols):
        j = n + sj
        if A_std[i, j] > 0:
            basis[i] = j
            used[j] = True
    # then look for structural singleton columns to cover = rows cheaply
    col_nnz = (np.abs(A_std[:, :n]) > _PIV_TOL).sum(axis=0)
    for i in range(m):
        if basis[i] >= 0:
            continue
        for j in range(n):
            if not used[j] and col_nnz[j] == 1 and A_std[i, j] > _PIV_TOL:
                basis[i] = j
                used[j] = True
                break

    need_artificial = np.flatnonzero(basis < 0)
    n_art = len(need_artificial)
    tab = np.zeros((m + 1, n_total + n_art + 1))
    tab[:m, :n_total] = A_std
    tab[:m, -1] = b
    for aj, i in enumerate(need_artificial):
        tab[i, n_total + aj] = 1.0
        basis[i] = n_total + aj

    # normalize rows with a structural basic column to coefficient 1 and
    # eliminate that column elsewhere
    for i in range(m):
        j = basis[i]
        if j < n_total and tab[i, j] != 1.0:
            tab[i, :] /= tab[i, j]
    for i in range(m):
        j = basis[i]
        if j < n_total:
            col = tab[:m, j].copy()
            col[i] = 0.0
            nz = np.flatnonzero(np.abs(col) > 0)
            for r in nz:
                tab[r, :] -= col[r] * tab[i, :]

    bland_after = 5 * (m + n_total + n_art)
    maxiter = 10_000 + 200 * (m + n_total)

    if n_art:
        # phase 1: minimize the sum of artificials
        c1 = np.zeros(n_total + n_art)
        c1[n_total:] = 1.0
        _set_cost_row(tab, basis, c1, m)
        status = run(tab, basis, n_total, _PIV_TOL, bland_after, maxiter)
        if status == _simplex_py.ITERATION_LIMIT:
            raise RuntimeError("simplex iteration limit in phase 1")
        if -tab[m, -1] > TOL_FEAS * max(1.0, np.abs(b).max(initial=0.0)):
            return LpSolution(LpStatus.INFEASIBLE)
        # drive basic artificials out where possible; leftover rows are
        # redundant and keep a zero-valued artificial
        for i in range(m):
            if basis[i] >= n_total:
                for j in range(n_total):
                    if abs(tab[i, j]) > 1e-7:
                        _pivot(tab, basis, i, j)
                        break

    c2 = np.concatenate([model.c, np.zeros(n_total + n_art - n)])
    _set_cost_row(tab, basis, c2, m)
    status = run(tab, basis, n_total, _PIV_TOL, bland_after, maxiter)
    if status == _simplex_py.ITERATION_LIMIT:
        raise RuntimeError("simplex iteration limit in phase 2")
    if status == _simplex_py.UNBOUNDED:
        return LpSolution(LpStatus.UNBOUNDED)

    x_shifted = np.zeros(n_total + n_art)
    x_shifted[basis] = tab[:m, -1]
    x = x_shifted[:n] + shift
    objective = float(model.c @ x)

    duals = _extract_duals(A_std, basis, c2, flip, need_artificial, m, n_rows)
    return LpSolution(LpStatus.OPTIMAL, x=x, duals=duals, objective=objective)


def _set_cost_row(tab, basis, c, m):
    n_all = tab.shape[1] - 1
    tab[m, :n_all] = c
    tab[m, -1] = 0.0
    for i in range(m):
        cb = c[basis[i]]
        if cb != 0.0:
            tab[m, :] -= cb * tab[i, :]


def _pivot(tab, basis, i, j):
    tab[i, :] /= tab[i, j]
    col = tab[:, j].copy()
    col[i] = 0.0
    tab -= np.outer(col, tab[i, :])
    tab[:, j] = 0.0
    tab[i, j] = 1.0
    basis[i] = j


def _extract_duals(A_std, basis, c_all, flip, art_rows, m, n_rows):
    """y = c_B B^-1 from the standard-form basis columns; artificial basics
    (redundant rows) are unit columns with zero cost, so they pin the
    corresponding dual component to zero."""
    if m == 0:
        return np.zeros(0)
    n_total = A_std.shape[1]
    B = np.zeros((m, m))
    cb = np.zeros(m)
    for i, j in enumerate(basis):
        if j < n_total:
            B[:, i] = A_std[:, j]
            cb[i] = c_all[j]
        else:
            B[art_rows[j - n_total], i] = 1.0
    try:
        y = np.linalg.solve(B.T, cb)
    except np.linalg.LinAlgError:
        y = np.linalg.lstsq(B.T, cb, rcond=None)[0]
    y[flip] *= -1.0
    return y[:n_rows]
