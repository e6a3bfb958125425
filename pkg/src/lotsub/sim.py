"""Steady-state rolling-horizon simulation with batch-means statistics.

The simulator draws an AR(1) demand path, runs the chosen policy one
period at a time, carries the implemented inventory and backlog forward,
and records the per-period cost (setup + holding + substitution) together
with a stock-out indicator.  Warm-up periods are discarded; the remainder
is split into fixed-length batches and a Student-t interval is built on
the batch means.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .core import Instance, SystemState
from .policy import PolicyKind, decide

#: realized backlog above this counts as a stock-out
TOL_STOCKOUT = 1e-6

# substream purposes, used as SeedSequence spawn keys
_PURPOSE_DEMAND = 0
_PURPOSE_SCENARIOS = 1


def substream(seed, purpose, period):
    """Independent deterministic generator for one (purpose, period) pair.

    Derived via SeedSequence spawn keys, so any subset of periods can be
    simulated (or parallelized) without changing the draws of the rest.
    """
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(purpose, period))
    )


@dataclass(frozen=True)
class SimConfig:
    policy: PolicyKind
    t_sim: int = 4010
    t_warm: int = 10
    batch_count: int = 160
    batch_len: int = 25
    seed: int = 0

    def violations(self):
        out = self.policy.violations()
        if self.t_warm < 0 or self.t_sim <= self.t_warm:
            out.append("need 0 <= t_warm < t_sim")
        if self.t_sim - self.t_warm != self.batch_count * self.batch_len:
            out.append("recorded periods must equal batch_count * batch_len")
        if self.batch_count < 2:
            out.append("batch_count must be >= 2 for a confidence interval")
        return out


@dataclass
class SimulationReport:
    config: SimConfig
    # per recorded period, in order
    cost: np.ndarray = None
    cost_setup: np.ndarray = None
    cost_holding: np.ndarray = None
    cost_substitution: np.ndarray = None
    z: np.ndarray = None
    n_setups: np.ndarray = None
    k_hat_size: np.ndarray = None
    fell_back: np.ndarray = None
    # aggregates
    mean_cost: float = np.nan
    cost_half_width: float = np.nan
    service_pct: float = np.nan
    service_half_width: float = np.nan

    @property
    def periods_recorded(self):
        return 0 if self.cost is None else self.cost.size


def ar_next(dm, d_prev, stream):
    """One AR step per product, clamped at zero."""
    d_prev = np.asarray(d_prev, dtype=float)
    eps = dm.noise_pool[stream.integers(0, dm.noise_pool.size, size=d_prev.size)]
    return np.maximum(0.0, dm.C + dm.ar1 * d_prev + dm.ar2 * eps)


def batch_ci(values, batch_count, batch_len):
    """Mean and 95% half-width from non-overlapping batch means."""
    values = np.asarray(values, dtype=float)
    if values.size != batch_count * batch_len:
        raise ValueError("values length must equal batch_count * batch_len")
    means = values.reshape(batch_count, batch_len).mean(axis=1)
    spread = float(means.std(ddof=1)) if batch_count > 1 else 0.0
    t_crit = float(stats.t.ppf(0.975, batch_count - 1))
    return float(means.mean()), t_crit * spread / np.sqrt(batch_count)


def delta_cost(cost_quantile, cost_cc):
    """Percent cost advantage of the chance-constrained policy."""
    if cost_quantile <= 0:
        raise ValueError("reference cost must be positive")
    return 100.0 * (cost_quantile - cost_cc) / cost_quantile


def roll(inst: Instance, cfg: SimConfig, observer=None) -> SimulationReport:
    """Simulate cfg.t_sim periods of the rolling-horizon policy.

    The first period observes zero demand while the AR chain is seeded at
    its stationary mean, so forecasts condition on the mean rather than on
    the artificial zero.  ``observer``, if given, is called with
    (period, state, d_hat, decision) each period, before the state update.
    """
    bad = cfg.violations()
    if bad:
        raise ValueError("; ".join(bad))
    dm = inst.demand
    K = inst.K
    v = np.zeros(K)
    b = np.zeros(K)
    d_hat = np.zeros(K)
    d_chain = np.full(K, dm.long_run_mean)

    n_rec = cfg.t_sim - cfg.t_warm
    rec = {
        name: np.zeros(n_rec)
        for name in ("cost", "cost_setup", "cost_holding", "cost_substitution")
    }
    z = np.zeros(n_rec, dtype=np.int8)
    n_setups = np.zeros(n_rec, dtype=np.int16)
    k_hat_size = np.zeros(n_rec, dtype=np.int16)
    fell_back = np.zeros(n_rec, dtype=np.int8)

    for t in range(1, cfg.t_sim + 1):
        state = SystemState(v=v, b=b, d_last=d_chain)
        stream = substream(cfg.seed, _PURPOSE_SCENARIOS, t)
        try:
            dec = decide(inst, state, d_hat, cfg.policy, stream)
        except RuntimeError as exc:
            raise RuntimeError(f"policy failed in period {t}: {exc}") from exc
        if observer is not None:
            observer(t, state, d_hat, dec)

        if t > cfg.t_warm:
            r = t - cfg.t_warm - 1
            rec["cost"][r] = dec.period_cost
            rec["cost_setup"][r] = dec.cost_setup
            rec["cost_holding"][r] = dec.cost_holding
            rec["cost_substitution"][r] = dec.cost_substitution
            z[r] = 1 if np.any(dec.b > TOL_STOCKOUT) else 0
            n_setups[r] = int(dec.y.sum())
            k_hat_size[r] = len(dec.k_hat)
            fell_back[r] = 1 if dec.fell_back else 0

        v, b = dec.v, dec.b
        d_next = ar_next(dm, d_chain, substream(cfg.seed, _PURPOSE_DEMAND, t))
        d_hat = d_next
        d_chain = d_next

    mean_cost, cost_hw = batch_ci(rec["cost"], cfg.batch_count, cfg.batch_len)
    z_mean, z_hw = batch_ci(z.astype(float), cfg.batch_count, cfg.batch_len)
    return SimulationReport(
        config=cfg,
        cost=rec["cost"],
        cost_setup=rec["cost_setup"],
        cost_holding=rec["cost_holding"],
        cost_substitution=rec["cost_substitution"],
        z=z,
        n_setups=n_setups,
        k_hat_size=k_hat_size,
        fell_back=fell_back,
        mean_cost=mean_cost,
        cost_half_width=cost_hw,
        service_pct=100.0 * (1.0 - z_mean),
        service_half_width=100.0 * z_hw,
    )
