"""Coverage oracle and cut machinery for the chance-constrained master.

A first-stage decision covers a scenario when its end-of-period inventory
and backlog allow the scenario's demand to be met with no new backlog.
``q_membership`` tests this with a small LP whose duals yield valid cuts:
weak duality gives pi.b1 + beta.v1 <= -h_w for every covered scenario,
where h_w = pi.D^w, and the dual feasible region does not depend on the
scenario.  Sorting the h values and mixing them with the indicator
variables produces a stronger family; ``separate_mixing`` finds a most
violated member in one linear scan.  ``cc_cut_callback`` packages the
whole procedure for ``milp.solve_milp``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Instance
from .lp import EQ, LE, LpModel, LpStatus, solve_lp
from .milp import CUT_VIOLATION_TOL, Cut

#: coverage slack below this counts as "no stock-out"
TOL_COVER = 1e-6


@dataclass(frozen=True)
class DualRay:
    """Dual solution of the coverage LP: pi on the demand rows (free),
    beta on the inventory rows (<= 0 for a minimization LP)."""

    pi: np.ndarray
    beta: np.ndarray

    def dual_feasible(self, inst: Instance, tol=1e-7) -> bool:
        """Reduced-cost check: slack columns need pi <= 1, transfer columns
        (k serves j) need pi_j + beta_k <= 0, and beta <= 0."""
        if np.any(self.pi > 1.0 + tol) or np.any(self.beta > tol):
            return False
        for k, j in inst.arcs:
            if self.pi[j] + self.beta[k] > tol:
                return False
        return True


@dataclass(frozen=True)
class MixingFamily:
    """The sorted h values that parameterize the mixing inequalities."""

    h: np.ndarray
    p: int
    sigma: np.ndarray = None  # permutation sorting h descending

    def __post_init__(self):
        object.__setattr__(self, "h", np.asarray(self.h, dtype=float))
        if self.sigma is None:
            object.__setattr__(self, "sigma", np.argsort(-self.h, kind="stable"))
        if not (0 <= self.p < self.h.size):
            raise ValueError("p must lie in [0, n_scenarios)")

    @property
    def h_base(self):
        """(p+1)-th largest h; the constant term of every family member."""
        return float(self.h[self.sigma[self.p]])


class CoverageLp:
    """Reusable structure of the coverage LP for one instance.

    Variables are the scenario transfer quantities (one per arc) followed
    by one shortfall variable per product; only the right-hand sides change
    between calls, so the row skeleton is built once.
    """

    def __init__(self, inst: Instance):
        self.inst = inst
        K = inst.K
        n_arcs = len(inst.arcs)
        self.n = n_arcs + K
        c = np.zeros(self.n)
        c[n_arcs:] = 1.0
        self.c = c
        by_source = [[] for _ in range(K)]
        by_target = [[] for _ in range(K)]
        for a, (k, j) in enumerate(inst.arcs):
            by_source[k].append(a)
            by_target[j].append(a)
        self.demand_rows = [
            (
                np.array(by_target[k] + [n_arcs + k], dtype=np.int64),
                np.ones(len(by_target[k]) + 1),
            )
            for k in range(K)
        ]
        self.supply_rows = [
            (np.array(by_source[k], dtype=np.int64), np.ones(len(by_source[k])))
            for k in range(K)
        ]

    def model(self, v1, b1, d):
        rows = [
            (idx, val, EQ, d[k] + b1[k])
            for k, (idx, val) in enumerate(self.demand_rows)
        ]
        rows += [
            (idx, val, LE, v1[k]) for k, (idx, val) in enumerate(self.supply_rows)
        ]
        return LpModel(c=self.c, rows=rows)


@dataclass(frozen=True)
class QResult:
    value: float
    duals: DualRay
    is_member: bool


def q_membership(inst, v1, b1, d, cache: CoverageLp | None = None) -> QResult:
    """Minimum unavoidable shortfall when inventory v1 plus backlog b1 face
    scenario demand d; membership means the shortfall is (numerically) 0."""
    cache = cache or CoverageLp(inst)
    sol = solve_lp(cache.model(np.asarray(v1), np.asarray(b1), np.asarray(d)))
    if sol.status is not LpStatus.OPTIMAL:
        raise RuntimeError(f"coverage LP ended {sol.status}; should be impossible")
    K = inst.K
    duals = DualRay(pi=sol.duals[:K].copy(), beta=sol.duals[K:].copy())
    return QResult(sol.objective, duals, sol.objective <= TOL_COVER)


def compute_h(duals: DualRay, scen) -> np.ndarray:
    """h_w = pi . D^w for every scenario."""
    return np.asarray(scen, dtype=float) @ duals.pi


def separate_mixing(fam, duals, z_hat, v_hat, b_hat, idx=None):
    """Most violated mixing inequality, or None if none exceeds tolerance.

    The scan visits scenarios in ascending z_hat order, keeps those whose h
    exceeds the running threshold (initialized to the (p+1)-th largest h),
    and stops once the threshold reaches the maximum h.  ``idx`` supplies
    the (v1, b1, z) variable index arrays in the enclosing model; the
    default is the canonical layout v1, b1, z back to back.
    """
    z_hat = np.asarray(z_hat, dtype=float)
    n = fam.h.size
    K = duals.pi.size
    if idx is None:
        idx = (np.arange(K), np.arange(K, 2 * K), np.arange(2 * K, 2 * K + n))
    v_idx, b_idx, z_idx = (np.asarray(a, dtype=np.int64) for a in idx)

    h, base, h_max = fam.h, fam.h_base, float(fam.h[fam.sigma[0]])
    chosen = []
    level = base
    for w in np.lexsort((np.arange(n), z_hat)):
        if level >= h_max:
            break
        if h[w] > level:
            chosen.append(w)
            level = h[w]
    # the empty selection is itself a family member: some scenario among
    # the p+1 largest h must be covered, so lhs <= -base holds outright
    chosen.sort(key=lambda w: -h[w])
    steps = np.array([h[w] for w in chosen] + [base])
    z_coefs = steps[:-1] - steps[1:]  # h_{t_i} - h_{t_{i+1}} >= 0
    rhs = -steps[0]

    lhs = float(duals.beta @ v_hat + duals.pi @ b_hat)
    if chosen:
        lhs -= float(z_coefs @ z_hat[chosen])
    if lhs - rhs <= CUT_VIOLATION_TOL:
        return None

    indices = np.concatenate([v_idx, b_idx, z_idx[chosen]])
    coefs = np.concatenate([duals.beta, duals.pi, -z_coefs])
    keep = coefs != 0.0
    return Cut(indices=indices[keep], coefs=coefs[keep], rhs=rhs)


def _cut_key(cut: Cut) -> tuple:
    order = np.argsort(cut.indices)
    return (
        tuple(cut.indices[order].tolist()),
        tuple(np.round(cut.coefs[order] / 1e-9).astype(np.int64).tolist()),
        int(round(cut.rhs / 1e-9)),
    )


def cc_cut_callback(inst, scen, vm, cache: CoverageLp | None = None, log=None):
    """Build the lazy-cut callback for a master built by build_cc_master.

    ``vm`` is the master's VarMap.  Fractional candidates (root rounds) are
    probed on every scenario with z below 1 and all violated cuts are
    returned; integer candidates only on scenarios with z = 0, returning
    the first violated cut.  ``log``, if given, receives one
    (scenario, shortfall, violation) tuple per emitted cut.
    """
    scen = np.asarray(scen, dtype=float)
    n_scen = scen.shape[0]
    p = int(np.floor((1.0 - inst.alpha) * n_scen))
    cache = cache or CoverageLp(inst)
    v_idx, b_idx, z_idx = vm.v[0], vm.b[0], vm.z
    seen = set()

    def callback(x, is_integer):
        v1, b1, z = x[v_idx], x[b_idx], x[z_idx]
        cuts = []
        for w in range(n_scen):
            if is_integer:
                if z[w] > 0.5:
                    continue
            elif z[w] >= 1.0 - 1e-6:
                continue
            res = q_membership(inst, v1, b1, scen[w], cache)
            if res.is_member:
                continue
            fam = MixingFamily(h=compute_h(res.duals, scen), p=p)
            cut = separate_mixing(fam, res.duals, z, v1, b1,
                                  idx=(v_idx, b_idx, z_idx))
            if cut is None:
                continue
            key = _cut_key(cut)
            if key in seen:
                continue
            seen.add(key)
            cuts.append(cut)
            if log is not None:
                log.append((w, res.value, cut.violation(x)))
            if is_integer:
                break
        return cuts

    return callback
