"""Benchmark instance generator.

Costs are derived from four scalar knobs: ``eta`` spreads the reference
production costs across products, ``tau`` scales substitution cost relative
to the production-cost difference, ``rho`` sets holding cost relative to
production cost, and ``tbo`` (time between orders) scales the setup cost
against the holding cost.  Production costs themselves are zero: cost
differences attributable to substitution are carried by the substitution
cost, so production cost is constant across policies and excluded.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import DemandModel, Instance, SubstitutionGraph, backlog_cost

SUBSTITUTION_KINDS = ("none", "partial", "full")

#: width of the "partial" ladder: a product may serve demand at most this
#: many quality levels below itself
PARTIAL_WIDTH = 3


@dataclass(frozen=True)
class GeneratorConfig:
    K: int = 10
    eta: float = 0.2
    tau: float = 1.5
    rho: float = 0.05
    tbo: float = 1.0
    alpha: float = 0.95
    substitution: str = "partial"
    T: int = 6
    scenario_count: int = 100
    seed: int = 0
    demand_C: float = 20.0
    demand_ar1: float = 0.8
    demand_ar2: float = 10.0
    pool_size: int = 1000
    # tau < 1 undercuts the production-cost difference and is rejected
    # unless explicitly allowed (solver benchmarks use tau=0.5)
    allow_nonstandard: bool = False

    def violations(self):
        out = []
        if self.substitution not in SUBSTITUTION_KINDS:
            out.append(f"substitution must be one of {SUBSTITUTION_KINDS}")
        if self.tau < 1.0 and not self.allow_nonstandard:
            out.append("tau must be >= 1 (pass allow_nonstandard to override)")
        for name in ("eta", "rho", "tbo"):
            if getattr(self, name) <= 0:
                out.append(f"{name} must be > 0")
        if not (0.0 < self.alpha < 1.0):
            out.append("alpha must lie in (0,1)")
        if self.K < 1 or self.T < 2:
            out.append("need K >= 1 and T >= 2")
        if self.scenario_count < 1:
            out.append("scenario_count must be >= 1")
        if self.pool_size < 1:
            out.append("pool_size must be >= 1")
        return out


def substitution_graph(kind: str, K: int, width: int = PARTIAL_WIDTH) -> SubstitutionGraph:
    """Quality-ladder graphs: product 0 is the highest quality and may serve
    lower-quality demand (downward substitution only)."""
    if kind == "none":
        return SubstitutionGraph.self_only(K)
    if kind == "partial":
        return SubstitutionGraph.from_lists(
            [[j for j in range(k, min(k + width, K - 1) + 1)] for k in range(K)]
        )
    if kind == "full":
        return SubstitutionGraph.from_lists([list(range(k, K)) for k in range(K)])
    raise ValueError(f"unknown substitution kind: {kind!r}")


def reference_production_cost(cfg: GeneratorConfig) -> np.ndarray:
    """1 + eta * (number of quality levels below product k)."""
    return 1.0 + cfg.eta * (cfg.K - 1 - np.arange(cfg.K))


def generate(cfg: GeneratorConfig) -> Instance:
    """Build an Instance from the config; deterministic except that the seed
    fixes the demand noise pool."""
    bad = cfg.violations()
    if bad:
        raise ValueError("; ".join(bad))

    graph = substitution_graph(cfg.substitution, cfg.K)
    cbar = reference_production_cost(cfg)

    arcs = graph.arcs
    sub_row = np.array([max(0.0, cfg.tau * (cbar[k] - cbar[j])) for k, j in arcs])
    hold_row = cfg.rho * cbar

    expected_demand = cfg.demand_C / (1.0 - cfg.demand_ar1)
    setup_row = expected_demand * cfg.tbo**2 * hold_row / 2.0

    rng = np.random.default_rng(cfg.seed)
    pool = rng.standard_normal(cfg.pool_size)
    demand = DemandModel(
        C=cfg.demand_C, ar1=cfg.demand_ar1, ar2=cfg.demand_ar2,
        noise_pool=pool, seed=cfg.seed,
    )

    inst = Instance(
        K=cfg.K,
        T=cfg.T,
        alpha=cfg.alpha,
        graph=graph,
        c_setup=np.tile(setup_row, (cfg.T, 1)),
        c_prod=np.zeros((cfg.T, cfg.K)),
        c_hold=np.tile(hold_row, (cfg.T, 1)),
        c_sub=np.tile(sub_row, (cfg.T, 1)),
        c_back2=np.zeros(cfg.K),
        demand=demand,
    )
    return replace(inst, c_back2=backlog_cost(inst))
