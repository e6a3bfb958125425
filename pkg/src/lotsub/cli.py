"""Command-line surface: instance generation, simulation experiments,
solver benchmark, and report merging.

Every command emits CSV with a fixed, documented header.  Timing numbers
are intentionally kept out of the CSVs (they would break byte-for-byte
reproducibility of identical runs); the ``bench`` command writes them to a
plain-text sidecar instead, and ``simulate --trace`` adds a ``solver_ms``
column only when ``--timing`` is passed explicitly.

Instance document schema (JSON, one flat object):
    schema        "lotsub-instance-1"
    K, T          integers
    eta, tau, rho, tbo, alpha   reals (Table 2 names)
    omega         integer scenario count used by the cc policy
    substitution  "none" | "partial" | "full"
    seed          integer (fixes the demand noise pool)
    pool_size     integer
    demand_C, demand_ar1, demand_ar2   reals
    allow_nonstandard   bool (permits tau < 1)
Instances regenerate deterministically from this document.
"""

from __future__ import annotations

import itertools
import json
import sys
import time
from pathlib import Path

import click
import numpy as np

from .instance import SUBSTITUTION_KINDS, GeneratorConfig, generate
from .policy import POLICY_NAMES, PolicyKind, decide, make_scenarios, _estimates
from .sim import SimConfig, delta_cost, roll, substream, _PURPOSE_SCENARIOS
from .models import build_cc_extensive, build_cc_master
from .milp import MilpStatus, solve_milp
from .cuts import cc_cut_callback

SCHEMA = "lotsub-instance-1"

AGGREGATE_HEADER = (
    "instance_id,policy,mean_cost,cost_ci,service_pct,sl_ci,periods,seed"
)
TRACE_HEADER = "period,Z,cost_setup,cost_hold,cost_sub,n_setups"
MANIFEST_HEADER = "instance_id,K,T,eta,tau,rho,tbo,alpha,omega,substitution,seed"
BENCH_HEADER = (
    "omega,alpha,T,method,objective,gap,optimal,cuts,nodes"
)
REPORT_HEADER = (
    "instance_id,cost_quantile,cost_cc,delta_cost_pct,"
    "service_quantile,service_cc"
)

_SWEEPABLE = ("eta", "tau", "rho", "tbo", "alpha", "K", "T", "omega",
              "substitution", "seed")


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float):
        return f"{x:.6f}"
    return str(x)


def config_to_document(cfg: GeneratorConfig) -> dict:
    return {
        "schema": SCHEMA,
        "K": cfg.K,
        "T": cfg.T,
        "eta": cfg.eta,
        "tau": cfg.tau,
        "rho": cfg.rho,
        "tbo": cfg.tbo,
        "alpha": cfg.alpha,
        "omega": cfg.scenario_count,
        "substitution": cfg.substitution,
        "seed": cfg.seed,
        "pool_size": cfg.pool_size,
        "demand_C": cfg.demand_C,
        "demand_ar1": cfg.demand_ar1,
        "demand_ar2": cfg.demand_ar2,
        "allow_nonstandard": cfg.allow_nonstandard,
    }


def document_to_config(doc: dict) -> GeneratorConfig:
    if doc.get("schema") != SCHEMA:
        raise ValueError(f"unknown instance document schema: {doc.get('schema')!r}")
    return GeneratorConfig(
        K=int(doc["K"]),
        T=int(doc["T"]),
        eta=float(doc["eta"]),
        tau=float(doc["tau"]),
        rho=float(doc["rho"]),
        tbo=float(doc["tbo"]),
        alpha=float(doc["alpha"]),
        scenario_count=int(doc["omega"]),
        substitution=str(doc["substitution"]),
        seed=int(doc["seed"]),
        pool_size=int(doc.get("pool_size", 1000)),
        demand_C=float(doc.get("demand_C", 20.0)),
        demand_ar1=float(doc.get("demand_ar1", 0.8)),
        demand_ar2=float(doc.get("demand_ar2", 10.0)),
        allow_nonstandard=bool(doc.get("allow_nonstandard", False)),
    )


def write_instance(cfg: GeneratorConfig, path: Path) -> None:
    path.write_text(json.dumps(config_to_document(cfg), indent=2, sort_keys=True) + "\n")


def read_instance(path: Path) -> GeneratorConfig:
    return document_to_config(json.loads(Path(path).read_text()))


def _parse_sweep(text: str):
    """``name=v1,v2,...`` with Table 2 parameter names."""
    if "=" not in text:
        raise click.BadParameter(f"sweep must look like name=v1,v2,... (got {text!r})")
    name, _, rest = text.partition("=")
    name = name.strip()
    if name not in _SWEEPABLE:
        raise click.BadParameter(f"unknown sweep parameter {name!r}; "
                                 f"choose from {_SWEEPABLE}")
    raw = [v.strip() for v in rest.split(",") if v.strip()]
    if not raw:
        raise click.BadParameter(f"sweep {name!r} has no values")
    if name == "substitution":
        vals = raw
    elif name in ("K", "T", "omega", "seed"):
        vals = [int(v) for v in raw]
    else:
        vals = [float(v) for v in raw]
    return name, vals


def _apply_params(base: GeneratorConfig, params: dict) -> GeneratorConfig:
    kwargs = dict(params)
    if "omega" in kwargs:
        kwargs["scenario_count"] = kwargs.pop("omega")
    from dataclasses import replace
    return replace(base, **kwargs)


def _instance_id(params: dict) -> str:
    if not params:
        return "base"
    return "_".join(f"{k}={_fmt(v)}" for k, v in sorted(params.items()))


@click.group()
def main():
    """Stochastic lot sizing with substitution: experiment driver."""


@main.command()
@click.option("--base", "base_only", is_flag=True,
              help="Write a single instance with the base-case parameters.")
@click.option("--sweep", "sweeps", multiple=True,
              help="Parameter sweep, e.g. tbo=1,1.25,1.5,1.75,2. Repeatable; "
                   "multiple sweeps form a grid.")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path),
              default=Path("instances"), show_default=True)
@click.option("--eta", type=float, default=None)
@click.option("--tau", type=float, default=None)
@click.option("--rho", type=float, default=None)
@click.option("--tbo", type=float, default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--k", "k_products", type=int, default=None, help="Number of products K.")
@click.option("--t", "horizon", type=int, default=None, help="Look-ahead horizon T.")
@click.option("--omega", type=int, default=None, help="Scenario count for the cc policy.")
@click.option("--substitution", type=click.Choice(SUBSTITUTION_KINDS), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--allow-nonstandard", is_flag=True,
              help="Permit tau < 1 (used only by solver benchmarks).")
def gen(base_only, sweeps, out, eta, tau, rho, tbo, alpha, k_products, horizon,
        omega, substitution, seed, allow_nonstandard):
    """Write instance documents (and a manifest CSV) for a parameter grid."""
    overrides = {
        name: val
        for name, val in (
            ("eta", eta), ("tau", tau), ("rho", rho), ("tbo", tbo),
            ("alpha", alpha), ("K", k_products), ("T", horizon),
            ("scenario_count", omega), ("substitution", substitution),
            ("seed", seed),
        )
        if val is not None
    }
    if allow_nonstandard:
        overrides["allow_nonstandard"] = True
    base = GeneratorConfig(**overrides)

    axes = [_parse_sweep(s) for s in sweeps]
    if base_only or not axes:
        grid = [{}]
    else:
        names = [name for name, _ in axes]
        grid = [dict(zip(names, combo))
                for combo in itertools.product(*(vals for _, vals in axes))]

    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for params in grid:
        cfg = _apply_params(base, params)
        bad = cfg.violations()
        if bad:
            raise click.ClickException(
                f"invalid parameters for {_instance_id(params)}: " + "; ".join(bad)
            )
        generate(cfg)  # validates end to end before anything is written
        iid = _instance_id(params)
        write_instance(cfg, out / f"{iid}.json")
        rows.append(
            f"{iid},{cfg.K},{cfg.T},{_fmt(cfg.eta)},{_fmt(cfg.tau)},"
            f"{_fmt(cfg.rho)},{_fmt(cfg.tbo)},{_fmt(cfg.alpha)},"
            f"{cfg.scenario_count},{cfg.substitution},{cfg.seed}"
        )
    (out / "manifest.csv").write_text(MANIFEST_HEADER + "\n" + "\n".join(rows) + "\n")
    click.echo(f"wrote {len(rows)} instance(s) to {out}")


def _trace_writer(path: Path, timing: bool):
    header = TRACE_HEADER + (",solver_ms" if timing else "")
    lines = [header]

    def record(r, z, cs, ch, csub, n_setups, ms):
        row = f"{r},{z},{_fmt(cs)},{_fmt(ch)},{_fmt(csub)},{n_setups}"
        if timing:
            row += f",{ms:.1f}"
        lines.append(row)

    def flush():
        path.write_text("\n".join(lines) + "\n")

    return record, flush


@main.command()
@click.option("--instances", "instance_paths", multiple=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="Instance documents written by gen. Default: base case in memory.")
@click.option("--policies", default="average,quantile,cc", show_default=True,
              help="Comma-separated subset of average,quantile,cc.")
@click.option("--t-sim", type=int, default=4010, show_default=True)
@click.option("--t-warm", type=int, default=10, show_default=True)
@click.option("--batches", type=int, default=160, show_default=True)
@click.option("--batch-len", type=int, default=25, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--omega", type=int, default=None,
              help="Scenario count override for the cc policy.")
@click.option("--time-limit", type=float, default=60.0, show_default=True,
              help="Per-period solver time limit in seconds.")
@click.option("--no-stockout-step", is_flag=True,
              help="Ablation: skip the stock-out determination step.")
@click.option("--substitution", "substitution_sweep", default=None,
              help="Comma-separated substitution levels to sweep "
                   "(none,partial,full); regenerates each instance per level.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path),
              default=Path("results.csv"), show_default=True)
@click.option("--trace", "trace_dir", type=click.Path(file_okay=False, path_type=Path),
              default=None, help="Also write one per-period trace CSV per run.")
@click.option("--timing", is_flag=True,
              help="Add solver_ms to trace CSVs (breaks byte-identical reruns).")
def simulate(instance_paths, policies, t_sim, t_warm, batches, batch_len, seed,
             omega, time_limit, no_stockout_step, substitution_sweep, out,
             trace_dir, timing):
    """Run rolling-horizon simulations and write the aggregate CSV."""
    policy_list = [p.strip() for p in policies.split(",") if p.strip()]
    for p in policy_list:
        if p not in POLICY_NAMES:
            raise click.ClickException(f"unknown policy {p!r}; choose from {POLICY_NAMES}")

    if instance_paths:
        configs = [(path.stem, read_instance(path)) for path in instance_paths]
    else:
        configs = [("base", GeneratorConfig())]

    if substitution_sweep:
        levels = [s.strip() for s in substitution_sweep.split(",") if s.strip()]
        for lv in levels:
            if lv not in SUBSTITUTION_KINDS:
                raise click.ClickException(f"unknown substitution level {lv!r}")
        from dataclasses import replace
        configs = [
            (f"{iid}_substitution={lv}", replace(cfg, substitution=lv))
            for iid, cfg in configs
            for lv in levels
        ]

    if trace_dir is not None:
        trace_dir.mkdir(parents=True, exist_ok=True)

    rows = []
    for iid, cfg in configs:
        inst = generate(cfg)
        for pname in policy_list:
            kind = PolicyKind(
                pname,
                scenario_count=omega if omega is not None else cfg.scenario_count,
                skip_stockout_step=no_stockout_step,
                time_limit=time_limit,
            )
            sim_cfg = SimConfig(policy=kind, t_sim=t_sim, t_warm=t_warm,
                                batch_count=batches, batch_len=batch_len, seed=seed)
            observer = None
            flush = None
            if trace_dir is not None:
                record, flush = _trace_writer(
                    trace_dir / f"{iid}_{pname}.csv", timing)
                clock = {"t0": time.monotonic()}

                def observer(t, state, d_hat, dec, _rec=record, _clock=clock):
                    now = time.monotonic()
                    _rec(t, 1 if np.any(dec.b > 1e-6) else 0,
                         dec.cost_setup, dec.cost_holding,
                         dec.cost_substitution, int(dec.y.sum()),
                         1000.0 * (now - _clock["t0"]))
                    _clock["t0"] = now

            try:
                rep = roll(inst, sim_cfg, observer=observer)
            except (RuntimeError, ValueError) as exc:
                raise click.ClickException(f"{iid}/{pname}: {exc}") from exc
            if flush is not None:
                flush()
            rows.append(
                f"{iid},{pname},{_fmt(rep.mean_cost)},{_fmt(rep.cost_half_width)},"
                f"{_fmt(rep.service_pct)},{_fmt(rep.service_half_width)},"
                f"{rep.periods_recorded},{seed}"
            )
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(AGGREGATE_HEADER + "\n" + "\n".join(rows) + "\n")
    click.echo(f"wrote {len(rows)} row(s) to {out}")


def _warm_state(inst, warm_periods, seed):
    """State reached after a quantile-policy warm-up of ``warm_periods``
    periods, together with the demand observed in the following period."""
    from .core import SystemState
    from .sim import ar_next, _PURPOSE_DEMAND

    v = np.zeros(inst.K)
    b = np.zeros(inst.K)
    d_hat = np.zeros(inst.K)
    d_chain = np.full(inst.K, inst.demand.long_run_mean)
    state = SystemState(v=v, b=b, d_last=d_chain)
    for t in range(1, warm_periods + 2):
        state = SystemState(v=v, b=b, d_last=d_chain)
        if t == warm_periods + 1:
            break
        dec = decide(inst, state, d_hat, PolicyKind("quantile"))
        v, b = dec.v, dec.b
        d_next = ar_next(inst.demand, d_chain, substream(seed, _PURPOSE_DEMAND, t))
        d_hat = d_next
        d_chain = d_next
    return state, d_hat


@main.command()
@click.option("--omega", default="100", show_default=True,
              help="Comma-separated scenario counts.")
@click.option("--alpha", default="0.95", show_default=True,
              help="Comma-separated service levels.")
@click.option("--t", "horizons", default="6", show_default=True,
              help="Comma-separated look-ahead horizons.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--warm", type=int, default=10, show_default=True,
              help="Warm-up periods before the benchmarked state.")
@click.option("--time-limit", type=float, default=7200.0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path),
              default=Path("bench.csv"), show_default=True)
def bench(omega, alpha, horizons, seed, warm, time_limit, out):
    """Solve the chance-constrained model with both the extensive form and
    branch-and-cut on a warmed-up state; write objectives/gaps to CSV and
    wall-clock times to a plain-text sidecar (kept out of the CSV so that
    identical runs produce identical CSVs)."""
    omegas = [int(v) for v in omega.split(",") if v.strip()]
    alphas = [float(v) for v in alpha.split(",") if v.strip()]
    ts = [int(v) for v in horizons.split(",") if v.strip()]

    rows = []
    timing_lines = []
    failed = False
    for n_scen, a, T in itertools.product(omegas, alphas, ts):
        cfg = GeneratorConfig(alpha=a, T=T, scenario_count=n_scen, seed=seed)
        inst = generate(cfg)
        state, d_hat = _warm_state(inst, warm, seed)
        from .policy import stockout_step
        k_hat = stockout_step(inst, state, d_hat)[0]
        scen = make_scenarios(inst.demand, state.d_last, n_scen,
                              substream(seed, _PURPOSE_SCENARIOS, warm + 1))
        d_bar = _estimates(inst, PolicyKind("cc"), state.d_last)

        for method in ("extensive", "branch-and-cut"):
            if method == "extensive":
                model, vm = build_cc_extensive(inst, state, d_hat, scen,
                                               d_bar[1:], k_hat=k_hat)
                callback = None
            else:
                model, vm = build_cc_master(inst, state, d_hat, scen,
                                            d_bar[1:], k_hat=k_hat)
                callback = cc_cut_callback(inst, scen, vm)
            t0 = time.monotonic()
            res = solve_milp(model, callback=callback, time_limit=time_limit)
            elapsed = time.monotonic() - t0
            optimal = res.status is MilpStatus.OPTIMAL
            if not optimal and res.status is not MilpStatus.TIME_LIMIT:
                failed = True
            rows.append(
                f"{n_scen},{_fmt(a)},{T},{method},{_fmt(float(res.objective))},"
                f"{_fmt(float(res.gap) if np.isfinite(res.gap) else 0.0)},"
                f"{str(optimal).lower()},{res.cuts_added},{res.node_count}"
            )
            timing_lines.append(
                f"omega={n_scen} alpha={_fmt(a)} T={T} method={method} "
                f"seconds={elapsed:.3f} status={res.status.value}"
            )
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(BENCH_HEADER + "\n" + "\n".join(rows) + "\n")
    Path(str(out) + ".timing.log").write_text("\n".join(timing_lines) + "\n")
    click.echo(f"wrote {len(rows)} row(s) to {out}")
    if failed:
        sys.exit(1)


@main.command()
@click.argument("csvs", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path),
              default=Path("report.csv"), show_default=True)
def report(csvs, out):
    """Merge aggregate CSVs and compute the cc-vs-quantile cost advantage."""
    by_instance = {}
    for path in csvs:
        lines = path.read_text().strip().splitlines()
        if not lines or lines[0] != AGGREGATE_HEADER:
            raise click.ClickException(
                f"{path}: expected header {AGGREGATE_HEADER!r}")
        for line in lines[1:]:
            parts = line.split(",")
            iid, pname = parts[0], parts[1]
            by_instance.setdefault(iid, {})[pname] = {
                "mean_cost": float(parts[2]),
                "service_pct": float(parts[4]),
            }
    rows = []
    for iid in sorted(by_instance):
        entry = by_instance[iid]
        if "quantile" not in entry or "cc" not in entry:
            continue
        q, c = entry["quantile"], entry["cc"]
        rows.append(
            f"{iid},{_fmt(q['mean_cost'])},{_fmt(c['mean_cost'])},"
            f"{_fmt(delta_cost(q['mean_cost'], c['mean_cost']))},"
            f"{_fmt(q['service_pct'])},{_fmt(c['service_pct'])}"
        )
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(REPORT_HEADER + "\n" + "\n".join(rows) + "\n")
    click.echo(f"wrote {len(rows)} row(s) to {out}")


if __name__ == "__main__":
    main()
