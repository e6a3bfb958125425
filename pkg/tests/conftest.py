"""Shared fixtures and independent oracles for the test suite.

The oracles deliberately avoid the production code paths: LPs are checked
against brute-force vertex enumeration, mixed-binary programs against
exhaustive enumeration over the binaries, coverage membership against a
max-flow computation, and mixing-inequality separation against subset
enumeration.
"""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from lotsub.core import DemandModel, Instance, SubstitutionGraph, SystemState
from lotsub.lp import EQ, GE, LE, LpModel


# ---------------------------------------------------------------------------
# instance helpers


def tiny_instance(K=2, T=3, alpha=0.5, serves=None, c_setup=1.0, c_hold=0.1,
                  c_sub=0.3, c_back2=5.0, pool=(0.0,), seed=0,
                  C=20.0, ar1=0.8, ar2=10.0):
    """Hand-buildable instance with uniform costs; ``serves[k]`` lists the
    products k may serve (self-loops added automatically)."""
    if serves is None:
        serves = [list(range(k, K)) for k in range(K)]
    serves = [sorted(set(lst) | {k}) for k, lst in enumerate(serves)]
    graph = SubstitutionGraph.from_lists(serves)
    arcs = graph.arcs
    sub_row = np.array([0.0 if k == j else c_sub for k, j in arcs])
    demand = DemandModel(C=C, ar1=ar1, ar2=ar2,
                         noise_pool=np.asarray(pool, dtype=float), seed=seed)
    return Instance(
        K=K, T=T, alpha=alpha, graph=graph,
        c_setup=np.full((T, K), c_setup),
        c_prod=np.zeros((T, K)),
        c_hold=np.full((T, K), c_hold),
        c_sub=np.tile(sub_row, (T, 1)),
        c_back2=np.full(K, c_back2),
        demand=demand,
    )


def random_small_instance(rng, K=None, T=None, alpha=None):
    K = K if K is not None else int(rng.integers(1, 5))
    T = T if T is not None else int(rng.integers(2, 5))
    alpha = alpha if alpha is not None else float(rng.uniform(0.5, 0.95))
    serves = [
        sorted({k} | set(rng.choice(np.arange(k, K), size=rng.integers(0, K - k + 1),
                                    replace=False).tolist()))
        for k in range(K)
    ]
    inst = tiny_instance(K=K, T=T, alpha=alpha, serves=serves,
                         c_setup=float(rng.uniform(0.5, 5.0)),
                         c_hold=float(rng.uniform(0.02, 0.3)),
                         c_sub=float(rng.uniform(0.1, 1.0)),
                         c_back2=float(rng.uniform(1.0, 8.0)))
    return inst


def random_state(rng, K):
    return SystemState(
        v=rng.uniform(0.0, 30.0, K),
        b=np.where(rng.random(K) < 0.7, 0.0, rng.uniform(0.0, 5.0)),
        d_last=rng.uniform(0.0, 20.0, K),
    )


# ---------------------------------------------------------------------------
# LP oracle: brute-force vertex enumeration (bounded polytopes only)


def enumerate_lp_optimum(model: LpModel, tol=1e-7):
    """Minimum objective over all vertices of {x : rows, lo <= x <= hi}.

    Requires every variable to have finite bounds so the feasible set is
    compact and every optimum sits on a vertex.  Returns None when no
    feasible vertex exists (infeasible model).  Candidate vertices (each an
    intersection of n active hyperplanes) are solved in one batched call.
    """
    n = model.n_vars
    lo, hi = model.lo, model.hi
    assert np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))

    normals = []  # candidate active hyperplanes
    offsets = []
    for idx, val, sense, rhs in model.rows:
        a = np.zeros(n)
        a[idx] = val
        normals.append(a)
        offsets.append(rhs)
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        normals.extend([e, e])
        offsets.extend([lo[j], hi[j]])
    normals = np.array(normals)
    offsets = np.array(offsets)

    combos = np.array(list(itertools.combinations(range(len(normals)), n)))
    A = normals[combos]  # (n_combos, n, n)
    rhs = offsets[combos]
    dets = np.linalg.det(A)
    keep = np.abs(dets) > 1e-10
    if not np.any(keep):
        return None
    x = np.linalg.solve(A[keep], rhs[keep][..., None])[..., 0]

    ok = np.all(x >= lo - tol, axis=1) & np.all(x <= hi + tol, axis=1)
    vals = x @ normals[: len(model.rows)].T  # row activities
    for i, (_, _, sense, r) in enumerate(model.rows):
        if sense == LE:
            ok &= vals[:, i] <= r + tol
        elif sense == GE:
            ok &= vals[:, i] >= r - tol
        else:
            ok &= np.abs(vals[:, i] - r) <= tol
    if not np.any(ok):
        return None
    return float(np.min(x[ok] @ model.c))


def random_bounded_lp(rng, max_vars=6, max_rows=6):
    n = int(rng.integers(1, max_vars + 1))
    m = int(rng.integers(1, max_rows + 1))
    c = rng.uniform(-2.0, 2.0, n)
    rows = []
    senses = [LE, GE, EQ]
    for _ in range(m):
        nz = rng.choice(n, size=rng.integers(1, n + 1), replace=False)
        val = rng.uniform(-2.0, 2.0, nz.size)
        sense = senses[int(rng.integers(0, 3 if rng.random() < 0.3 else 2))]
        rhs = float(rng.uniform(-3.0, 6.0))
        rows.append((np.asarray(nz, dtype=np.int64), val, sense, rhs))
    model = LpModel(c=c, rows=rows)
    model.hi[:] = rng.uniform(1.0, 8.0, n)
    return model


# ---------------------------------------------------------------------------
# MILP oracle: exhaustive enumeration over binaries


def enumerate_milp_optimum(model, solve_lp):
    """Best objective over all 0/1 assignments of the binaries, solving the
    remaining LP exactly; None if every assignment is infeasible."""
    import copy

    base = model.base
    best = None
    nb = len(model.binaries)
    for bits in itertools.product((0.0, 1.0), repeat=nb):
        m = copy.deepcopy(base)
        for j, val in zip(model.binaries, bits):
            m.lo[j] = m.hi[j] = val
        sol = solve_lp(m)
        if sol.optimal and (best is None or sol.objective < best):
            best = sol.objective
    return best


# ---------------------------------------------------------------------------
# coverage oracle: max flow


def maxflow_coverage(inst, v1, b1, d, tol=1e-6):
    """True iff demand d + backlog b1 can be fully served from v1 along the
    substitution arcs — via networkx max flow, independent of the LP path."""
    import networkx as nx

    g = nx.DiGraph()
    total = 0.0
    for k in range(inst.K):
        g.add_edge("src", f"sup{k}", capacity=float(v1[k]))
        need = float(d[k] + b1[k])
        total += need
        g.add_edge(f"dem{k}", "snk", capacity=need)
    for k, j in inst.arcs:
        g.add_edge(f"sup{k}", f"dem{j}", capacity=float("inf"))
    flow = nx.maximum_flow_value(g, "src", "snk")
    return flow >= total - tol


# ---------------------------------------------------------------------------
# mixing-inequality oracle: subset enumeration


def brute_force_mixing(fam, duals, z_hat, v_hat, b_hat):
    """Maximum violation over every family member: subsets T drawn from the
    p largest-h scenarios (the valid mixing family), evaluated with T sorted
    by h descending and base value h_base."""
    base = fam.h_base
    candidates = [int(w) for w in fam.sigma[: fam.p]]
    lhs0 = float(duals.beta @ v_hat + duals.pi @ b_hat)
    best = lhs0 + base  # empty subset: lhs <= -base
    for r in range(1, len(candidates) + 1):
        for subset in itertools.combinations(candidates, r):
            hs = sorted((float(fam.h[w]) for w in subset), reverse=True)
            order = sorted(subset, key=lambda w: -float(fam.h[w]))
            steps = hs + [base]
            rhs = -steps[0]
            zterm = sum(
                (steps[i] - steps[i + 1]) * z_hat[order[i]] for i in range(r)
            )
            best = max(best, lhs0 - zterm - rhs)
    return best


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)
