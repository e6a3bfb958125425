"""Mixed-binary solver with a lazy-cut callback.

Relaxations and tree search are delegated to HiGHS (via scipy), which is
deterministic for identical input.  The callback discipline follows the
two-stage chance-constraint decomposition: at the root the callback is
invoked on fractional relaxation solutions for up to ``ROOT_CUT_ROUNDS``
rounds; afterwards the model is re-solved to integrality and the callback
is invoked on each integer incumbent, which is only accepted once the
callback returns no violated cut.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint
from scipy.optimize import milp as _highs_milp

from .lp import EQ, GE, LE, LpModel

ROOT_CUT_ROUNDS = 50
CUT_VIOLATION_TOL = 1e-6
TOL_INT = 1e-6
TOL_MIP_GAP = 1e-6


@dataclass
class Cut:
    """Sparse inequality sum(coefs * x[indices]) <= rhs."""

    indices: np.ndarray
    coefs: np.ndarray
    rhs: float

    def violation(self, x):
        return float(self.coefs @ x[self.indices] - self.rhs)

    def dense(self, n):
        a = np.zeros(n)
        a[self.indices] = self.coefs
        return a


@dataclass
class MilpModel:
    base: LpModel
    binaries: list[int] = field(default_factory=list)

    def check(self):
        self.base.check()
        n = self.base.n_vars
        for j in self.binaries:
            if not (0 <= j < n):
                raise ValueError("binary index out of range")
            if self.base.lo[j] < 0 or self.base.hi[j] > 1:
                raise ValueError("binary variable bounds must lie within [0,1]")


class MilpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    TIME_LIMIT = "time_limit"


@dataclass
class MilpResult:
    status: MilpStatus
    x: np.ndarray = None
    objective: float = np.nan
    bound: float = np.nan
    gap: float = np.nan
    node_count: int = 0
    cuts_added: int = 0


def _constraint_matrix(model: LpModel, cuts):
    n = model.n_vars
    row_ind, col_ind, data = [], [], []
    lb, ub = [], []
    r = 0
    for idx, val, sense, rhs in model.rows:
        row_ind.append(np.full(idx.size, r))
        col_ind.append(idx)
        data.append(val)
        if sense == LE:
            lb.append(-np.inf), ub.append(rhs)
        elif sense == GE:
            lb.append(rhs), ub.append(np.inf)
        else:
            lb.append(rhs), ub.append(rhs)
        r += 1
    for cut in cuts:
        row_ind.append(np.full(cut.indices.size, r))
        col_ind.append(cut.indices)
        data.append(cut.coefs)
        lb.append(-np.inf), ub.append(cut.rhs)
        r += 1
    if r == 0:
        # HiGHS wants at least one constraint row
        A = sparse.csr_matrix((1, n))
        return LinearConstraint(A, np.array([-np.inf]), np.array([np.inf]))
    A = sparse.csr_matrix(
        (np.concatenate(data), (np.concatenate(row_ind), np.concatenate(col_ind))),
        shape=(r, n),
    )
    return LinearConstraint(A, np.array(lb), np.array(ub))


def _run_highs(model, cuts, integrality, time_budget):
    # presolve stays off: the bundled HiGHS returns provably suboptimal
    # incumbents on some of our cut-augmented masters when it is enabled
    # (a feasible point with a better objective exists and satisfies every
    # row, bound, and integrality requirement)
    options = {"mip_rel_gap": TOL_MIP_GAP, "presolve": False}
    if time_budget is not None:
        options["time_limit"] = max(0.01, time_budget)
    return _highs_milp(
        c=model.c,
        constraints=_constraint_matrix(model, cuts),
        integrality=integrality,
        bounds=Bounds(model.lo, model.hi),
        options=options,
    )


def _is_integral(x, binaries):
    return bool(np.all(np.abs(x[binaries] - np.round(x[binaries])) <= TOL_INT))


def solve_milp(model: MilpModel, callback=None, time_limit=None) -> MilpResult:
    """Solve min c.x with the given binaries, lazily enforcing any logic the
    callback encodes.  Time limit exhaustion returns TIME_LIMIT with the
    best incumbent found, not an exception."""
    model.check()
    start = time.monotonic()

    def remaining():
        if time_limit is None:
            return None
        return time_limit - (time.monotonic() - start)

    n = model.base.n_vars
    relax_integrality = np.zeros(n, dtype=int)
    integrality = np.zeros(n, dtype=int)
    integrality[model.binaries] = 1
    binaries = np.array(model.binaries, dtype=int)

    cuts: list[Cut] = []

    if callback is not None:
        for _ in range(ROOT_CUT_ROUNDS):
            res = _run_highs(model.base, cuts, relax_integrality, remaining())
            if res.status == 2:
                return MilpResult(MilpStatus.INFEASIBLE, cuts_added=len(cuts))
            if res.status == 3:
                return MilpResult(MilpStatus.UNBOUNDED, cuts_added=len(cuts))
            if res.x is None:
                break
            is_int = _is_integral(res.x, binaries) if len(binaries) else True
            new = [
                c for c in callback(res.x, is_int)
                if c.violation(res.x) > CUT_VIOLATION_TOL
            ]
            if not new:
                break
            cuts.extend(new)
            budget = remaining()
            if budget is not None and budget <= 0:
                break

    node_count = 0
    while True:
        budget = remaining()
        if budget is not None and budget <= 0:
            return MilpResult(MilpStatus.TIME_LIMIT, cuts_added=len(cuts),
                              node_count=node_count)
        res = _run_highs(model.base, cuts, integrality, budget)
        node_count += int(getattr(res, "mip_node_count", 0) or 0)
        if res.status == 2:
            return MilpResult(MilpStatus.INFEASIBLE, cuts_added=len(cuts),
                              node_count=node_count)
        if res.status == 3:
            return MilpResult(MilpStatus.UNBOUNDED, cuts_added=len(cuts),
                              node_count=node_count)
        if res.status == 1 or res.x is None:
            return MilpResult(
                MilpStatus.TIME_LIMIT,
                x=res.x,
                objective=float(res.fun) if res.x is not None else np.nan,
                bound=float(getattr(res, "mip_dual_bound", np.nan) or np.nan),
                gap=float(getattr(res, "mip_gap", np.nan) or np.nan),
                cuts_added=len(cuts),
                node_count=node_count,
            )

        x = res.x.copy()
        x[binaries] = np.round(x[binaries])
        if callback is not None:
            new = [c for c in callback(x, True) if c.violation(x) > CUT_VIOLATION_TOL]
            if new:
                cuts.extend(new)
                continue
        bound = getattr(res, "mip_dual_bound", None)
        gap = getattr(res, "mip_gap", None)
        return MilpResult(
            MilpStatus.OPTIMAL,
            x=x,
            objective=float(res.fun),
            bound=float(bound) if bound is not None else float(res.fun),
            gap=float(gap) if gap is not None else 0.0,
            cuts_added=len(cuts),
            node_count=node_count,
        )
