"""LP solver: pinned examples, vertex-enumeration oracle, dual contracts."""

import numpy as np
import pytest

from lotsub import _simplex_py
from lotsub.lp import EQ, GE, LE, KERNEL, LpModel, LpStatus, solve_lp

from conftest import enumerate_lp_optimum, random_bounded_lp


class TestExamples:
    def test_single_bound(self):
        # min x s.t. x >= 3
        m = LpModel(c=np.array([1.0]), rows=[(np.array([1.0]), GE, 3.0)])
        sol = solve_lp(m)
        assert sol.optimal
        assert sol.objective == pytest.approx(3.0, abs=1e-9)
        assert sol.x[0] == pytest.approx(3.0, abs=1e-9)

    def test_box_triangle_with_dual(self):
        # min -x-y s.t. x+y <= 1, x,y in [0,1]; dual of the row is -1
        m = LpModel(c=np.array([-1.0, -1.0]),
                    rows=[(np.array([1.0, 1.0]), LE, 1.0)])
        m.hi[:] = 1.0
        sol = solve_lp(m)
        assert sol.optimal
        assert sol.objective == pytest.approx(-1.0, abs=1e-9)
        assert sol.duals[0] == pytest.approx(-1.0, abs=1e-9)

    def test_infeasible(self):
        m = LpModel(c=np.zeros(1), rows=[(np.array([1.0]), LE, -1.0)])
        sol = solve_lp(m)
        assert sol.status is LpStatus.INFEASIBLE

    def test_unbounded(self):
        m = LpModel(c=np.array([-1.0]), rows=[(np.array([1.0]), GE, 0.0)])
        sol = solve_lp(m)
        assert sol.status is LpStatus.UNBOUNDED


class TestOracle:
    def test_random_lps_match_vertex_enumeration(self, rng):
        hits = 0
        for _ in range(120):
            m = random_bounded_lp(rng)
            sol = solve_lp(m)
            oracle = enumerate_lp_optimum(m)
            if oracle is None:
                assert sol.status is LpStatus.INFEASIBLE
            else:
                hits += 1
                assert sol.optimal
                assert sol.objective == pytest.approx(oracle, abs=1e-8, rel=1e-8)
        assert hits > 20  # the generator must actually produce feasible LPs


class TestDuals:
    def test_strong_duality_and_sign_convention(self, rng):
        for _ in range(80):
            m = random_bounded_lp(rng)
            sol = solve_lp(m)
            if not sol.optimal:
                continue
            # sign convention for a minimization problem
            for (idx, val, sense, rhs), y in zip(m.rows, sol.duals):
                if sense == LE:
                    assert y <= 1e-7
                elif sense == GE:
                    assert y >= -1e-7
                # complementary slackness: inactive row -> zero dual
                slack = rhs - float(val @ sol.x[idx])
                if abs(slack) > 1e-6:
                    assert abs(y) < 1e-6

    def test_duals_reproduce_objective_on_equality_models(self, rng):
        # on models with only equality rows and lo=0, hi=inf, strong duality
        # reads objective = y.rhs exactly
        for _ in range(40):
            n = int(rng.integers(2, 5))
            x_feas = rng.uniform(0.5, 2.0, n)
            A = rng.uniform(-1.0, 1.0, (2, n))
            rows = [(A[i], EQ, float(A[i] @ x_feas)) for i in range(2)]
            c = rng.uniform(0.1, 2.0, n)  # bounded below on x >= 0
            m = LpModel(c=c, rows=rows)
            sol = solve_lp(m)
            if not sol.optimal:
                continue
            rhs = np.array([r[3] for r in m.rows])
            assert float(sol.duals @ rhs) == pytest.approx(sol.objective, abs=1e-6)


class TestRobustness:
    def test_anticycling_beale(self):
        # classic degenerate example that cycles under naive Dantzig pivoting
        m = LpModel(
            c=np.array([-0.75, 150.0, -0.02, 6.0]),
            rows=[
                (np.array([0.25, -60.0, -0.04, 9.0]), LE, 0.0),
                (np.array([0.5, -90.0, -0.02, 3.0]), LE, 0.0),
                (np.array([0.0, 0.0, 1.0, 0.0]), LE, 1.0),
            ],
        )
        sol = solve_lp(m)
        assert sol.optimal
        assert sol.objective == pytest.approx(-0.05, abs=1e-9)

    def test_fixed_variables(self):
        m = LpModel(c=np.array([1.0, 1.0]),
                    rows=[(np.array([1.0, 1.0]), GE, 3.0)])
        m.lo[0] = m.hi[0] = 2.0
        sol = solve_lp(m)
        assert sol.optimal
        assert sol.x[0] == pytest.approx(2.0, abs=1e-9)
        assert sol.objective == pytest.approx(3.0, abs=1e-9)

    def test_determinism(self, rng):
        m = random_bounded_lp(rng)
        a = solve_lp(m)
        b = solve_lp(m)
        assert a.status == b.status
        if a.optimal:
            assert np.array_equal(a.x, b.x)
            assert np.array_equal(a.duals, b.duals)


class TestKernels:
    def test_compiled_kernel_selected(self):
        # the build ships the compiled pivot loop; the pure-python twin is a
        # fallback, and both must agree
        assert KERNEL in ("compiled", "python")

    def test_python_twin_matches(self, rng):
        for _ in range(60):
            m = random_bounded_lp(rng)
            a = solve_lp(m)
            b = solve_lp(m, kernel=_simplex_py)
            assert a.status == b.status
            if a.optimal:
                assert a.objective == pytest.approx(b.objective, abs=1e-9)
                assert np.allclose(a.x, b.x, atol=1e-9)
