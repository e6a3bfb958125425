#!/usr/bin/env python3
"""Compare the compiled simplex pivot kernel against its pure-numpy twin.

Times the LPs the simulator actually hammers (stock-out determination and
the coverage oracle) plus a batch of random dense LPs, solving each with
both kernels and checking that the answers agree along the way.

Usage: python3 benchmarks/bench_simplex.py [--repeats N]
"""

import argparse
import time

import numpy as np

from lotsub import lp as lp_mod
from lotsub import _simplex_py
from lotsub.core import SystemState
from lotsub.cuts import CoverageLp
from lotsub.instance import GeneratorConfig, generate
from lotsub.lp import KERNEL, LE, GE, EQ, LpModel, solve_lp
from lotsub.models import build_stockout_lp

try:
    from lotsub import _simplex
except ImportError:
    _simplex = None


def workloads(rng):
    out = []

    inst = generate(GeneratorConfig())
    states = [
        SystemState(
            v=rng.uniform(0, 150, inst.K),
            b=np.where(rng.random(inst.K) < 0.7, 0.0, rng.uniform(0, 20, inst.K)),
            d_last=rng.uniform(50, 150, inst.K),
        )
        for _ in range(40)
    ]
    demands = [rng.uniform(50, 150, inst.K) for _ in states]

    out.append((
        "stockout K=10",
        [build_stockout_lp(inst, st, d)[0] for st, d in zip(states, demands)],
    ))

    cov = CoverageLp(inst)
    out.append((
        "coverage K=10",
        [cov.model(st.v, st.b, d) for st, d in zip(states, demands)],
    ))

    dense = []
    senses = [LE, GE, EQ]
    for _ in range(40):
        n = int(rng.integers(10, 30))
        m = int(rng.integers(5, 20))
        model = LpModel(
            c=rng.uniform(-2, 2, n),
            rows=[(rng.uniform(-1, 2, n), senses[int(rng.integers(0, 3))],
                   float(rng.uniform(0, 10))) for _ in range(m)],
        )
        model.hi[:] = rng.uniform(2, 10, n)
        dense.append(model)
    out.append(("random dense", dense))
    return out


def time_kernel(models, kernel, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        sols = [solve_lp(m, kernel=kernel) for m in models]
        best = min(best, time.perf_counter() - t0)
    return best, sols


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    print(f"active kernel at import time: {KERNEL}")
    if _simplex is None:
        print("compiled kernel unavailable; timing the python twin only")

    rng = np.random.default_rng(0)
    for name, models in workloads(rng):
        t_py, sols_py = time_kernel(models, _simplex_py, args.repeats)
        line = f"{name:15s}  n={len(models):3d}  python {t_py * 1e3:8.2f} ms"
        if _simplex is not None:
            t_c, sols_c = time_kernel(models, _simplex, args.repeats)
            for a, b in zip(sols_py, sols_c):
                assert a.status == b.status
                if a.optimal:
                    assert abs(a.objective - b.objective) <= 1e-8 * (
                        1.0 + abs(a.objective))
            line += f"  compiled {t_c * 1e3:8.2f} ms  speedup {t_py / t_c:5.1f}x"
        print(line)


if __name__ == "__main__":
    main()
