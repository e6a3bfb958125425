"""Translate the planning formulations into LpModel/MilpModel structures.

Variable order is fixed (per period: y, x, s, i, b, v; then the scenario
blocks s', i', b'; then the indicators z; then the coverage copies), so
solutions are comparable across runs.  Every row carries a semantic tag;
``audit_rows`` exposes per-tag counts for structural checks.

Three look-ahead models are built here:

* ``build_stockout_lp`` - the current-period minimum-total-backlog LP used
  to decide which products must end the period backlog-free.
* ``build_deterministic`` - the T-period MILP with point estimates for all
  future demands (average and quantile policies).
* ``build_cc_extensive`` / ``build_cc_master`` - the two-stage model with a
  joint service-level constraint over next-period demand scenarios.  The
  extensive form carries per-scenario coverage variables and indicator
  big-M rows; the master drops them and relies on lazily separated cuts to
  enforce "indicator off implies scenario covered".
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .core import Instance, SystemState, big_m_cc, big_m_child, big_m_deterministic
from .lp import EQ, GE, LE, LpModel
from .milp import MilpModel


@dataclass
class VarMap:
    """Named variable-index lookup; -1 marks variables absent in a model."""

    n: int = 0
    y: np.ndarray = None  # (T, K)
    x: np.ndarray = None  # (T, K)
    s: np.ndarray = None  # (T, n_arcs)
    i: np.ndarray = None  # (T, K)
    b: np.ndarray = None  # (T, K)
    v: np.ndarray = None  # (T, K)
    s_scen: np.ndarray = None  # (n_scen, n_arcs)
    i_scen: np.ndarray = None  # (n_scen, K)
    b_scen: np.ndarray = None  # (n_scen, K)
    z: np.ndarray = None  # (n_scen,)
    b_cover: np.ndarray = None  # (n_scen, K), extensive form only
    s_cover: np.ndarray = None  # (n_scen, n_arcs), extensive form only
    row_tags: list = field(default_factory=list)

    def alloc(self, shape):
        count = int(np.prod(shape))
        block = np.arange(self.n, self.n + count).reshape(shape)
        self.n += count
        return block


def audit_rows(vm: VarMap) -> Counter:
    return Counter(vm.row_tags)


class _Builder:
    def __init__(self, inst):
        self.inst = inst
        self.vm = VarMap()
        self.rows = []
        self.obj = None

    def add_row(self, idx, val, sense, rhs, tag):
        idx = np.asarray(idx, dtype=np.int64)
        val = np.asarray(val, dtype=float)
        keep = val != 0.0
        self.rows.append((idx[keep], val[keep], sense, float(rhs)))
        self.vm.row_tags.append(tag)


def _serving_arcs(inst):
    """arc index lists: by_source[k] = arcs (k, j); by_target[k] = arcs (j, k)."""
    by_source = [[] for _ in range(inst.K)]
    by_target = [[] for _ in range(inst.K)]
    for a, (k, j) in enumerate(inst.arcs):
        by_source[k].append(a)
        by_target[j].append(a)
    return by_source, by_target


def build_stockout_lp(inst: Instance, state: SystemState, d_hat1):
    """Minimum-total-backlog LP for the current period."""
    b = _Builder(inst)
    K, arcs = inst.K, inst.arcs
    vm = b.vm
    vm.s = vm.alloc((1, len(arcs)))
    vm.b = vm.alloc((1, K))
    by_source, by_target = _serving_arcs(inst)

    for k in range(K):
        idx = [vm.s[0, a] for a in by_target[k]] + [vm.b[0, k]]
        val = [1.0] * len(by_target[k]) + [1.0]
        b.add_row(idx, val, EQ, d_hat1[k] + state.b[k], "demand_balance")
    for k in range(K):
        idx = [vm.s[0, a] for a in by_source[k]]
        b.add_row(idx, [1.0] * len(idx), LE, state.v[k], "inventory_limit")

    c = np.zeros(vm.n)
    c[vm.b[0]] = 1.0
    return LpModel(c=c, rows=b.rows), vm


def _first_stage_rows(b, vm, inst, state, d_hat1, M, periods_s, demand_rhs):
    """Rows shared by the deterministic and chance-constrained builders.

    ``periods_s`` lists the 0-based periods that own first-stage
    substitution variables; ``demand_rhs[t]`` gives the estimate rows'
    right-hand side for those periods beyond the first.
    """
    K, T = inst.K, inst.T
    by_source, by_target = _serving_arcs(inst)

    for t in range(T):
        for k in range(K):
            b.add_row([vm.x[t, k], vm.y[t, k]], [1.0, -M[t, k]], LE, 0.0, "setup_link")

    # period-1 demand balance against observed demand and carried backlog
    for k in range(K):
        idx = [vm.s[0, a] for a in by_target[k]] + [vm.b[0, k]]
        val = [1.0] * len(by_target[k]) + [1.0]
        b.add_row(idx, val, EQ, d_hat1[k] + state.b[k], "demand_p1")

    # later-period demand rows: estimates must be met; only the backlog
    # carried from the previous existing backlog variable appears
    for t in periods_s:
        if t == 0:
            continue
        for k in range(K):
            idx = [vm.s[t, a] for a in by_target[k]]
            val = [1.0] * len(idx)
            if vm.b[t - 1, k] >= 0:
                idx.append(vm.b[t - 1, k])
                val.append(-1.0)
            b.add_row(idx, val, EQ, demand_rhs[t][k], "demand_est")

    # inventory usage: serving plus carried intermediate inventory
    for t in periods_s:
        for k in range(K):
            idx = [vm.s[t, a] for a in by_source[k]] + [vm.i[t, k]]
            val = [1.0] * (len(idx) - 1) + [1.0]
            if t == 0:
                b.add_row(idx, val, EQ, state.v[k], "inventory_use")
            else:
                idx.append(vm.v[t - 1, k])
                val.append(-1.0)
                b.add_row(idx, val, EQ, 0.0, "inventory_use")

    # inventory after production
    for t in range(T):
        for k in range(K):
            b.add_row(
                [vm.v[t, k], vm.i[t, k], vm.x[t, k]],
                [1.0, -1.0, -1.0],
                EQ,
                0.0,
                "inventory_after_production",
            )


def _apply_khat(model, vm, k_hat):
    for k in k_hat:
        model.hi[vm.b[0, k]] = 0.0


def build_deterministic(inst, state, d_hat1, d_bar, k_hat=()):
    """T-period MILP with deterministic demand estimates for periods 2..T.

    Backlog exists only in period 1 (and only for products outside
    ``k_hat``); later periods must meet the estimates exactly, which also
    pins end-of-horizon backlog to zero.
    """
    d_bar = np.asarray(d_bar, dtype=float)
    K, T, n_arcs = inst.K, inst.T, len(inst.arcs)
    b = _Builder(inst)
    vm = b.vm
    vm.y = vm.alloc((T, K))
    vm.x = vm.alloc((T, K))
    vm.s = vm.alloc((T, n_arcs))
    vm.i = vm.alloc((T, K))
    vm.v = vm.alloc((T, K))
    vm.b = np.full((T, K), -1, dtype=np.int64)
    vm.b[0] = vm.alloc((K,))

    M = big_m_deterministic(inst, state, d_hat1, d_bar)
    demand_rhs = {t: d_bar[t - 1] for t in range(1, T)}
    _first_stage_rows(b, vm, inst, state, d_hat1, M, range(T), demand_rhs)

    c = np.zeros(vm.n)
    for t in range(T):
        c[vm.y[t]] += inst.c_setup[t]
        c[vm.x[t]] += inst.c_prod[t]
        c[vm.i[t]] += inst.c_hold[t]
        c[vm.s[t]] += inst.c_sub[t]
    model = MilpModel(LpModel(c=c, rows=b.rows), binaries=list(vm.y.ravel()))
    model.base.hi[vm.y] = 1.0
    _apply_khat(model.base, vm, k_hat)
    return model, vm


def _build_cc(inst, state, d_hat1, scen, d_bar_tail, k_hat, extensive):
    scen = np.asarray(scen, dtype=float)
    d_bar_tail = np.asarray(d_bar_tail, dtype=float).reshape(-1, inst.K)
    n_scen = scen.shape[0]
    K, T, n_arcs = inst.K, inst.T, len(inst.arcs)
    by_source, by_target = _serving_arcs(inst)

    b = _Builder(inst)
    vm = b.vm
    vm.y = vm.alloc((T, K))
    vm.x = vm.alloc((T, K))
    vm.s = np.full((T, n_arcs), -1, dtype=np.int64)
    vm.s[0] = vm.alloc((n_arcs,))
    for t in range(2, T):
        vm.s[t] = vm.alloc((n_arcs,))
    vm.i = vm.alloc((T, K))
    vm.b = np.full((T, K), -1, dtype=np.int64)
    vm.b[0] = vm.alloc((K,))
    vm.b[1] = vm.alloc((K,))
    vm.v = vm.alloc((T, K))
    vm.s_scen = vm.alloc((n_scen, n_arcs))
    vm.i_scen = vm.alloc((n_scen, K))
    vm.b_scen = vm.alloc((n_scen, K))
    vm.z = vm.alloc((n_scen,))
    if extensive:
        vm.b_cover = vm.alloc((n_scen, K))
        vm.s_cover = vm.alloc((n_scen, n_arcs))

    M = big_m_cc(inst, state, d_hat1, scen, d_bar_tail)
    demand_rhs = {t: d_bar_tail[t - 2] for t in range(2, T)}
    periods_s = [0] + list(range(2, T))
    _first_stage_rows(b, vm, inst, state, d_hat1, M, periods_s, demand_rhs)

    # per-scenario period-2 balance and inventory rows (cost shaping)
    for w in range(n_scen):
        for k in range(K):
            idx = [vm.s_scen[w, a] for a in by_target[k]]
            idx += [vm.b_scen[w, k], vm.b[0, k]]
            val = [1.0] * (len(idx) - 2) + [1.0, -1.0]
            b.add_row(idx, val, EQ, scen[w, k], "demand_scen")
        for k in range(K):
            idx = [vm.s_scen[w, a] for a in by_source[k]]
            idx += [vm.i_scen[w, k], vm.v[0, k]]
            val = [1.0] * (len(idx) - 2) + [1.0, -1.0]
            b.add_row(idx, val, EQ, 0.0, "inventory_scen")

    # period-2 inventory/backlog are the scenario averages
    weight = 1.0 / n_scen
    for k in range(K):
        idx = list(vm.i_scen[:, k]) + [vm.i[1, k]]
        b.add_row(idx, [weight] * n_scen + [-1.0], EQ, 0.0, "recombine_inventory")
    for k in range(K):
        idx = list(vm.b_scen[:, k]) + [vm.b[1, k]]
        b.add_row(idx, [weight] * n_scen + [-1.0], EQ, 0.0, "recombine_backlog")

    # at most floor((1-alpha)n) scenarios may go uncovered
    p = int(np.floor((1.0 - inst.alpha) * n_scen))
    b.add_row(vm.z, np.ones(n_scen), LE, float(p), "cardinality")

    if extensive:
        Mbar = big_m_child(inst, state, d_hat1, scen)
        for w in range(n_scen):
            for k in range(K):
                idx = [vm.s_cover[w, a] for a in by_target[k]]
                idx += [vm.b_cover[w, k], vm.b[0, k]]
                val = [1.0] * (len(idx) - 2) + [1.0, -1.0]
                b.add_row(idx, val, EQ, scen[w, k], "cover_demand")
            for k in range(K):
                idx = [vm.s_cover[w, a] for a in by_source[k]] + [vm.v[0, k]]
                val = [1.0] * (len(idx) - 1) + [-1.0]
                b.add_row(idx, val, LE, 0.0, "cover_inventory")
            for k in range(K):
                b.add_row(
                    [vm.b_cover[w, k], vm.z[w]],
                    [1.0, -Mbar[w, k]],
                    LE,
                    0.0,
                    "cover_indicator",
                )

    c = np.zeros(vm.n)
    for t in range(T):
        c[vm.y[t]] += inst.c_setup[t]
        c[vm.x[t]] += inst.c_prod[t]
        c[vm.i[t]] += inst.c_hold[t]
        if vm.s[t, 0] >= 0:
            c[vm.s[t]] += inst.c_sub[t]
    c[vm.b[1]] += inst.c_back2
    for w in range(n_scen):
        c[vm.s_scen[w]] += weight * inst.c_sub[1]

    binaries = list(vm.y.ravel()) + list(vm.z)
    model = MilpModel(LpModel(c=c, rows=b.rows), binaries=binaries)
    model.base.hi[vm.y] = 1.0
    model.base.hi[vm.z] = 1.0
    _apply_khat(model.base, vm, k_hat)
    return model, vm


def build_cc_extensive(inst, state, d_hat1, scen, d_bar_tail, k_hat=()):
    """Chance-constrained model with explicit per-scenario coverage rows."""
    return _build_cc(inst, state, d_hat1, scen, d_bar_tail, k_hat, extensive=True)


def build_cc_master(inst, state, d_hat1, scen, d_bar_tail, k_hat=()):
    """Chance-constrained master: coverage is enforced only through the cut
    callback, not by builtin rows."""
    return _build_cc(inst, state, d_hat1, scen, d_bar_tail, k_hat, extensive=False)


def flow_residuals(inst, vm, x_sol):
    """Per-product, per-period balance residual i_{t-1}+... == usage; used
    by tests to re-check conservation numerically on solved models."""
    out = []
    for t in range(inst.T):
        for k in range(inst.K):
            if vm.i[t, k] < 0 or vm.v[t, k] < 0:
                continue
            res = x_sol[vm.v[t, k]] - x_sol[vm.i[t, k]] - x_sol[vm.x[t, k]]
            out.append(res)
    return np.array(out)


def dump_lp_text(model, vm=None):
    """Human-readable dump of an LpModel/MilpModel for debugging: one line
    per row as `tag: sum(coef*x[idx]) sense rhs`."""
    base = model.base if isinstance(model, MilpModel) else model
    tags = vm.row_tags if vm is not None else [""] * len(base.rows)
    lines = [f"min {' + '.join(f'{c:g}*x{j}' for j, c in enumerate(base.c) if c)}"]
    for (idx, val, sense, rhs), tag in zip(base.rows, tags):
        terms = " + ".join(f"{v:g}*x{j}" for j, v in zip(idx, val))
        lines.append(f"{tag}: {terms} {sense} {rhs:g}")
    return "\n".join(lines)
