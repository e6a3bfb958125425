"""Shared domain types: substitution graph, problem instance, system state.

Products are indexed 0..K-1, with 0 conventionally the highest quality
product.  Substitution direction is encoded purely by the graph, never by
index arithmetic, so arbitrary topologies are supported.  Periods are
indexed 0..T-1 internally (period ``t`` of the look-ahead model is row
``t-1`` of the cost arrays).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: A set of equally weighted joint demand scenarios for the next period,
#: shape (n_scenarios, K).
ScenarioSet = np.ndarray


@dataclass(frozen=True)
class SubstitutionGraph:
    """Who may serve whom.

    ``serves[k]`` lists the products whose demand product k's inventory may
    fill (always including k itself); ``served_by[k]`` is the transpose:
    products whose inventory may fill demand of k.
    """

    serves: tuple[tuple[int, ...], ...]
    served_by: tuple[tuple[int, ...], ...] = field(init=False)

    def __post_init__(self):
        K = len(self.serves)
        minus = [[] for _ in range(K)]
        for k, targets in enumerate(self.serves):
            for j in targets:
                minus[j].append(k)
        object.__setattr__(self, "served_by", tuple(tuple(m) for m in minus))

    @classmethod
    def from_lists(cls, serves):
        return cls(tuple(tuple(js) for js in serves))

    @classmethod
    def self_only(cls, K):
        return cls.from_lists([[k] for k in range(K)])

    @property
    def K(self):
        return len(self.serves)

    @property
    def arcs(self):
        """Fixed arc order (k, j): k's inventory serving j's demand."""
        return [(k, j) for k in range(self.K) for j in self.serves[k]]

    def violations(self):
        out = []
        K = self.K
        for k, targets in enumerate(self.serves):
            if k not in targets:
                out.append(f"graph: product {k} must be able to serve itself")
            for j in targets:
                if not (0 <= j < K):
                    out.append(f"graph: arc ({k},{j}) out of range [0,{K})")
            if len(set(targets)) != len(targets):
                out.append(f"graph: duplicate arcs from product {k}")
        return out


@dataclass(frozen=True)
class DemandModel:
    """AR(1) demand process D_{t+1} = C + ar1*D_t + ar2*eps, with eps drawn
    uniformly from a fixed pool of standard-normal values."""

    C: float
    ar1: float
    ar2: float
    noise_pool: np.ndarray
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "noise_pool", np.asarray(self.noise_pool, dtype=float))

    @property
    def long_run_mean(self):
        return self.C / (1.0 - self.ar1)

    def violations(self):
        out = []
        if not (0.0 <= self.ar1 < 1.0):
            out.append("demand: ar1 must lie in [0,1)")
        if self.ar2 <= 0:
            out.append("demand: ar2 must be > 0")
        if self.noise_pool.size < 1:
            out.append("demand: noise pool must be nonempty")
        return out


@dataclass(frozen=True)
class Instance:
    """Static problem data.

    Cost arrays are indexed [t, k] over the look-ahead horizon; ``c_sub``
    is indexed [t, arc] following ``graph.arcs``.  ``cap`` holds production
    capacities with ``inf`` meaning uncapacitated (the default everywhere).
    ``c_back2`` is the period-2 backlog penalty of the chance-constrained
    policy; it is a policy parameter, not a real cost.
    """

    K: int
    T: int
    alpha: float
    graph: SubstitutionGraph
    c_setup: np.ndarray
    c_prod: np.ndarray
    c_hold: np.ndarray
    c_sub: np.ndarray
    c_back2: np.ndarray
    demand: DemandModel
    cap: np.ndarray | None = None

    def __post_init__(self):
        for name in ("c_setup", "c_prod", "c_hold", "c_sub", "c_back2"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.cap is not None:
            object.__setattr__(self, "cap", np.asarray(self.cap, dtype=float))

    @property
    def arcs(self):
        return self.graph.arcs

    def cap_or_inf(self):
        if self.cap is None:
            return np.full((self.T, self.K), np.inf)
        return self.cap

    def sub_cost(self, t, k, j):
        """Cost of product k serving demand of j in period t (0-based t)."""
        idx = self.arcs.index((k, j))
        return self.c_sub[t, idx]


@dataclass(frozen=True)
class SystemState:
    """Rolling-horizon state: inventory after production, backlog, and the
    last observed demand."""

    v: np.ndarray
    b: np.ndarray
    d_last: np.ndarray

    def __post_init__(self):
        for name in ("v", "b", "d_last"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))

    @classmethod
    def empty(cls, K):
        return cls(np.zeros(K), np.zeros(K), np.zeros(K))

    def violations(self):
        out = []
        for name in ("v", "b", "d_last"):
            arr = getattr(self, name)
            if not np.all(np.isfinite(arr)):
                out.append(f"state: {name} must be finite")
            elif np.any(arr < 0):
                out.append(f"state: {name} must be nonnegative")
        return out


def validate_instance(inst: Instance) -> list[str]:
    """Check every Instance invariant; returns one message per violation."""
    out = []
    if inst.K < 1:
        out.append("K must be >= 1")
    if inst.T < 2:
        out.append("T must be >= 2")
    if not (0.0 < inst.alpha < 1.0):
        out.append("alpha must lie in (0,1)")
    out.extend(inst.graph.violations())
    if inst.graph.K != inst.K:
        out.append("graph product count must equal K")
    out.extend(inst.demand.violations())

    arcs = inst.arcs
    for name in ("c_setup", "c_prod", "c_hold"):
        arr = getattr(inst, name)
        if arr.shape != (inst.T, inst.K):
            out.append(f"{name} must have shape (T, K)")
        elif np.any(arr < 0):
            out.append(f"{name} entries must be nonnegative")
    if inst.c_sub.shape != (inst.T, len(arcs)):
        out.append("c_sub must have one column per substitution arc")
    else:
        if np.any(inst.c_sub < 0):
            out.append("c_sub entries must be nonnegative")
        for a, (k, j) in enumerate(arcs):
            if k == j and np.any(inst.c_sub[:, a] != 0):
                out.append("self-substitution cost must be 0")
                break
    if inst.c_back2.shape != (inst.K,):
        out.append("c_back2 must have shape (K,)")

    if inst.cap is not None:
        if inst.cap.shape != (inst.T, inst.K):
            out.append("cap must have shape (T, K)")
        else:
            # every product needs at least one uncapacitated server
            for k in range(inst.K):
                if not any(
                    np.all(np.isinf(inst.cap[:, j])) for j in inst.graph.served_by[k]
                ):
                    out.append(
                        f"product {k} has no uncapacitated product able to serve it"
                    )
    return out


def _served_demand_mass(inst, state, d_hat1, future_rows):
    """Per-product total demand mass sum_{j in serves[k]} (b_j + d1_j + future_j)."""
    per_product = state.b + d_hat1 + future_rows
    return np.array(
        [sum(per_product[j] for j in inst.graph.serves[k]) for k in range(inst.K)]
    )


def big_m_deterministic(inst, state, d_hat1, d_bar):
    """Setup-linking big-M for the deterministic look-ahead model.

    ``d_bar`` holds the deterministic demand estimates for periods 2..T,
    shape (T-1, K).  The bound for product k is the total demand mass the
    products it can serve could ever require, clipped by finite capacity.
    """
    d_bar = np.asarray(d_bar, dtype=float)
    base = _served_demand_mass(inst, state, d_hat1, d_bar.sum(axis=0))
    M = np.tile(base, (inst.T, 1))
    return np.minimum(M, inst.cap_or_inf())


def big_m_cc(inst, state, d_hat1, scen, d_bar_tail):
    """Setup-linking big-M for the chance-constrained model: period 2 is
    bounded by the scenario-wise maximum, periods 3..T by the estimates."""
    scen = np.asarray(scen, dtype=float)
    d_bar_tail = np.asarray(d_bar_tail, dtype=float)
    future = scen.max(axis=0)
    if d_bar_tail.size:
        future = future + d_bar_tail.sum(axis=0)
    base = _served_demand_mass(inst, state, d_hat1, future)
    M = np.tile(base, (inst.T, 1))
    return np.minimum(M, inst.cap_or_inf())


def big_m_child(inst, state, d_hat1, scen):
    """Indicator big-M for the extensive-form scenario backlog variables."""
    scen = np.asarray(scen, dtype=float)
    return scen + d_hat1[None, :] + state.b[None, :]


def backlog_cost(inst: Instance) -> np.ndarray:
    """Period-2 backlog penalty: for each product, the maximum period-2
    substitution cost over arcs leaving any product that can serve it."""
    arcs = inst.arcs
    t2 = min(1, inst.T - 1)  # period-2 row
    max_out = np.zeros(inst.K)
    for a, (k, _) in enumerate(arcs):
        max_out[k] = max(max_out[k], inst.c_sub[t2, a])
    return np.array(
        [
            max((max_out[j] for j in inst.graph.served_by[k]), default=0.0)
            for k in range(inst.K)
        ]
    )
