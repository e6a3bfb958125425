"""Rolling-horizon decision policies.

Each period the simulator hands the policy the system state and the
observed demand.  The policy first runs the stock-out determination LP to
find which products can end the period backlog-free (those get their
backlog variable pinned to zero in the planning model), then solves its
look-ahead model and returns the implementable first-period decision.

Three policies are provided: "average" plans against conditional expected
demands, "quantile" replaces the next period's estimate with the alpha
quantile, and "cc" solves the two-stage model with a joint service-level
constraint over sampled scenarios.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Instance, SystemState
from .cuts import CoverageLp, cc_cut_callback, q_membership
from .lp import solve_lp
from .milp import MilpStatus, solve_milp
from .models import (
    build_cc_master,
    build_deterministic,
    build_stockout_lp,
)

#: absolute backlog below this counts as zero in the stock-out step
TOL_KHAT = 1e-6

POLICY_NAMES = ("average", "quantile", "cc")


@dataclass(frozen=True)
class PolicyKind:
    """Which look-ahead model to solve, plus policy-level switches."""

    name: str
    scenario_count: int = 100
    skip_stockout_step: bool = False
    time_limit: float = 60.0

    def violations(self):
        out = []
        if self.name not in POLICY_NAMES:
            out.append(f"policy name must be one of {POLICY_NAMES}")
        if self.scenario_count < 1:
            out.append("scenario_count must be >= 1")
        if self.time_limit <= 0:
            out.append("time_limit must be positive")
        return out


@dataclass
class PeriodDecision:
    """Implementable first-period slice of a look-ahead solution."""

    y: np.ndarray
    x: np.ndarray
    s: np.ndarray
    i: np.ndarray
    b: np.ndarray
    v: np.ndarray
    cost_setup: float
    cost_production: float
    cost_holding: float
    cost_substitution: float
    k_hat: tuple = ()
    objective: float = np.nan
    cuts_added: int = 0
    fell_back: bool = False

    @property
    def period_cost(self):
        """Recorded per-period cost; production cost is tracked separately
        and excluded here because its long-run average is policy
        independent."""
        return self.cost_setup + self.cost_holding + self.cost_substitution

    def violations(self, inst, state, d_hat1, tol=1e-6):
        out = []
        scale = 1.0 + float(np.abs(d_hat1).max(initial=0.0) + state.v.max(initial=0.0))
        for name in ("y", "x", "s", "i", "b", "v"):
            if np.any(getattr(self, name) < -tol * scale):
                out.append(f"decision: {name} must be nonnegative")
        if np.any((self.x > tol * scale) & (self.y < 0.5)):
            out.append("decision: production without setup")
        if np.any(np.abs(self.v - self.i - self.x) > tol * scale):
            out.append("decision: inventory after production identity broken")
        by_source = [[] for _ in range(inst.K)]
        by_target = [[] for _ in range(inst.K)]
        for a, (k, j) in enumerate(inst.arcs):
            by_source[k].append(a)
            by_target[j].append(a)
        for k in range(inst.K):
            served = sum(self.s[a] for a in by_target[k])
            if abs(served + self.b[k] - d_hat1[k] - state.b[k]) > tol * scale:
                out.append(f"decision: demand balance broken for product {k}")
            used = sum(self.s[a] for a in by_source[k])
            if abs(used + self.i[k] - state.v[k]) > tol * scale:
                out.append(f"decision: inventory balance broken for product {k}")
        for k in self.k_hat:
            if self.b[k] > tol * scale:
                out.append(f"decision: product {k} was declared backlog-free")
        return out


def conditional_mean_path(dm, d_last, steps):
    """Expected demand for the next ``steps`` periods given the latest
    observation, unrolling the AR recursion with the empirical pool mean."""
    d_last = np.asarray(d_last, dtype=float)
    mu = float(dm.noise_pool.mean())
    rows = np.empty((steps, d_last.size))
    cur = d_last
    for s in range(steps):
        cur = dm.C + dm.ar1 * cur + dm.ar2 * mu
        rows[s] = cur
    return rows


def quantile_next(dm, d_last, alpha):
    """Componentwise alpha quantile of next-period demand: the smallest
    pool value whose cumulative frequency reaches alpha."""
    pool = np.sort(dm.noise_pool)
    idx = int(np.ceil(alpha * pool.size)) - 1
    eps_q = pool[max(idx, 0)]
    return dm.C + dm.ar1 * np.asarray(d_last, dtype=float) + dm.ar2 * eps_q


def make_scenarios(dm, d_last, count, stream):
    """Sample joint next-period demand scenarios, independent per product,
    with negative realizations clamped to zero."""
    d_last = np.asarray(d_last, dtype=float)
    K = d_last.size
    eps = dm.noise_pool[stream.integers(0, dm.noise_pool.size, size=(count, K))]
    return np.maximum(0.0, dm.C + dm.ar1 * d_last[None, :] + dm.ar2 * eps)


def stockout_step(inst, state, d_hat1, tol=TOL_KHAT):
    """Products able to end the current period backlog-free.

    Returns (k_hat, minimum total backlog).  When the minimum is zero the
    whole period is stock-out free and every product is in k_hat.
    """
    lp, vm = build_stockout_lp(inst, state, d_hat1)
    sol = solve_lp(lp)
    if not sol.optimal:
        raise RuntimeError(f"stock-out LP ended {sol.status}")
    if sol.objective <= tol:
        return tuple(range(inst.K)), sol.objective
    b_star = sol.x[vm.b[0]]
    return tuple(int(k) for k in np.flatnonzero(b_star <= tol)), sol.objective


def _estimates(inst, kind, d_cond):
    """Demand estimates for look-ahead periods 2..T, clamped nonnegative."""
    path = np.maximum(0.0, conditional_mean_path(inst.demand, d_cond, inst.T - 1))
    if kind.name == "quantile":
        path[0] = np.maximum(0.0, quantile_next(inst.demand, d_cond, inst.alpha))
    return path


def _first_period_slice(inst, x, vm, k_hat, **extra):
    y1 = np.round(x[vm.y[0]])
    x1 = np.maximum(0.0, x[vm.x[0]])
    s1 = np.maximum(0.0, x[vm.s[0]])
    i1 = np.maximum(0.0, x[vm.i[0]])
    b1 = np.maximum(0.0, x[vm.b[0]])
    v1 = np.maximum(0.0, x[vm.v[0]])
    return PeriodDecision(
        y=y1, x=x1, s=s1, i=i1, b=b1, v=v1,
        cost_setup=float(inst.c_setup[0] @ y1),
        cost_production=float(inst.c_prod[0] @ x1),
        cost_holding=float(inst.c_hold[0] @ i1),
        cost_substitution=float(inst.c_sub[0] @ s1),
        k_hat=tuple(k_hat),
        **extra,
    )


def _solve_deterministic(inst, state, d_hat1, kind, k_hat, d_bar):
    model, vm = build_deterministic(inst, state, d_hat1, d_bar, k_hat=k_hat)
    res = solve_milp(model, time_limit=kind.time_limit)
    if res.status is not MilpStatus.OPTIMAL:
        raise RuntimeError(
            f"deterministic look-ahead ended {res.status.value}; "
            f"state v={state.v}, b={state.b}, demand={d_hat1}"
        )
    return _first_period_slice(inst, res.x, vm, k_hat, objective=res.objective)


def _cc_incumbent_usable(inst, scen, x, vm):
    """A time-limit incumbent is kept only if it is integer, respects the
    scenario budget, and covers every scenario it claims to cover."""
    if x is None:
        return False
    z = np.round(x[vm.z])
    if np.abs(x[vm.z] - z).max(initial=0.0) > 1e-6:
        return False
    p = int(np.floor((1.0 - inst.alpha) * scen.shape[0]))
    if z.sum() > p:
        return False
    cov = CoverageLp(inst)
    v1, b1 = x[vm.v[0]], x[vm.b[0]]
    return all(
        q_membership(inst, v1, b1, scen[w], cov).is_member
        for w in np.flatnonzero(z < 0.5)
    )


def decide(inst: Instance, state: SystemState, d_hat1, kind: PolicyKind,
           stream=None) -> PeriodDecision:
    """Run one period of the chosen policy and return the implementable
    first-period decision.

    ``state.d_last`` conditions the demand forecasts; ``d_hat1`` is the
    demand observed this period (the two differ only in the very first
    simulated period).  ``stream`` supplies the scenario randomness for the
    chance-constrained policy.
    """
    bad = kind.violations()
    if bad:
        raise ValueError("; ".join(bad))
    d_hat1 = np.asarray(d_hat1, dtype=float)
    k_hat = () if kind.skip_stockout_step else stockout_step(inst, state, d_hat1)[0]
    d_bar = _estimates(inst, kind, state.d_last)

    if kind.name in ("average", "quantile"):
        return _solve_deterministic(inst, state, d_hat1, kind, k_hat, d_bar)

    if stream is None:
        stream = np.random.default_rng(0)
    scen = make_scenarios(inst.demand, state.d_last, kind.scenario_count, stream)
    model, vm = build_cc_master(inst, state, d_hat1, scen, d_bar[1:], k_hat=k_hat)
    callback = cc_cut_callback(inst, scen, vm)
    res = solve_milp(model, callback=callback, time_limit=kind.time_limit)

    if res.status is MilpStatus.OPTIMAL:
        return _first_period_slice(inst, res.x, vm, k_hat,
                                   objective=res.objective,
                                   cuts_added=res.cuts_added)
    if res.status is MilpStatus.TIME_LIMIT and _cc_incumbent_usable(
            inst, scen, res.x, vm):
        return _first_period_slice(inst, res.x, vm, k_hat,
                                   objective=res.objective,
                                   cuts_added=res.cuts_added)
    if res.status is MilpStatus.TIME_LIMIT:
        dec = _solve_deterministic(
            inst, state, d_hat1,
            PolicyKind("quantile", skip_stockout_step=kind.skip_stockout_step,
                       time_limit=kind.time_limit),
            k_hat, _estimates(inst, PolicyKind("quantile"), state.d_last))
        dec.fell_back = True
        return dec
    raise RuntimeError(
        f"chance-constrained look-ahead ended {res.status.value}; "
        f"state v={state.v}, b={state.b}, demand={d_hat1}"
    )
