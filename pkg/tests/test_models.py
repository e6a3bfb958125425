"""Model builders: stock-out LP, deterministic look-ahead, chance-constrained
extensive form and master, structural audits, conservation identities."""

import numpy as np
import pytest

from lotsub.core import SystemState
from lotsub.cuts import cc_cut_callback
from lotsub.lp import solve_lp
from lotsub.milp import MilpStatus, solve_milp
from lotsub.models import (
    audit_rows,
    build_cc_extensive,
    build_cc_master,
    build_deterministic,
    build_stockout_lp,
    dump_lp_text,
    flow_residuals,
)

from conftest import random_small_instance, random_state, tiny_instance


def state(v, b=None, d_last=None):
    v = np.asarray(v, dtype=float)
    z = np.zeros_like(v)
    return SystemState(v=v, b=z if b is None else np.asarray(b, float),
                       d_last=z if d_last is None else d_last)


class TestStockoutLp:
    def test_ample_stock(self):
        inst = tiny_instance(K=1, T=2, serves=[[0]])
        lp, vm = build_stockout_lp(inst, state([5.0]), np.array([3.0]))
        sol = solve_lp(lp)
        assert sol.optimal
        assert sol.objective == pytest.approx(0.0, abs=1e-9)

    def test_substitution_covers_partially(self):
        # product 0 serves both; v=(5,1), demand (3,4): one unit short on 1
        inst = tiny_instance(K=2, T=2, serves=[[0, 1], [1]])
        lp, vm = build_stockout_lp(inst, state([5.0, 1.0]), np.array([3.0, 4.0]))
        sol = solve_lp(lp)
        assert sol.optimal
        assert sol.objective == pytest.approx(1.0, abs=1e-8)
        b = sol.x[vm.b[0]]
        assert b[0] == pytest.approx(0.0, abs=1e-8)
        assert b[1] == pytest.approx(1.0, abs=1e-8)

    def test_no_stock_anywhere(self):
        inst = tiny_instance(K=2, T=2, serves=[[0], [1]])
        lp, vm = build_stockout_lp(inst, state([0.0, 0.0]), np.array([2.0, 2.0]))
        sol = solve_lp(lp)
        assert sol.objective == pytest.approx(4.0, abs=1e-8)
        assert np.allclose(sol.x[vm.b[0]], [2.0, 2.0], atol=1e-8)


class TestDeterministic:
    def test_zero_everything(self):
        inst = tiny_instance(K=2, T=3)
        model, vm = build_deterministic(inst, state([0, 0]), np.zeros(2),
                                        np.zeros((2, 2)))
        res = solve_milp(model)
        assert res.status is MilpStatus.OPTIMAL
        assert res.objective == pytest.approx(0.0, abs=1e-9)

    def test_must_produce_ahead(self):
        # one-period lead time: period-2 demand 10 needs period-1 setup
        inst = tiny_instance(K=1, T=2, serves=[[0]], c_setup=3.0)
        model, vm = build_deterministic(inst, state([0.0]), np.zeros(1),
                                        np.array([[10.0]]))
        res = solve_milp(model)
        assert res.status is MilpStatus.OPTIMAL
        assert res.objective == pytest.approx(3.0 + 10.0 * 0.0, abs=1e-8)
        assert res.x[vm.y[0, 0]] == pytest.approx(1.0, abs=1e-6)
        assert res.x[vm.x[0, 0]] == pytest.approx(10.0, abs=1e-6)

    def test_initial_stock_avoids_setup(self):
        inst = tiny_instance(K=1, T=2, serves=[[0]], c_setup=3.0, c_hold=0.1)
        model, vm = build_deterministic(inst, state([10.0]), np.zeros(1),
                                        np.array([[10.0]]))
        res = solve_milp(model)
        assert res.status is MilpStatus.OPTIMAL
        # hold 10 units through period 1, never set up
        assert res.objective == pytest.approx(1.0, abs=1e-8)
        assert res.x[vm.y[0, 0]] == pytest.approx(0.0, abs=1e-6)

    def test_structural_audit(self):
        inst = tiny_instance(K=3, T=4, serves=[[0, 1], [1, 2], [2]])
        model, vm = build_deterministic(inst, state([0, 0, 0]), np.zeros(3),
                                        np.zeros((3, 3)))
        counts = audit_rows(vm)
        K, T = 3, 4
        assert counts["setup_link"] == K * T
        assert counts["demand_p1"] == K
        assert counts["demand_est"] == K * (T - 1)
        assert counts["inventory_use"] == K * T
        assert counts["inventory_after_production"] == K * T

    def test_k_hat_pins_backlog(self):
        inst = tiny_instance(K=2, T=2, serves=[[0], [1]])
        model, vm = build_deterministic(inst, state([0.0, 0.0]),
                                        np.array([2.0, 2.0]),
                                        np.zeros((1, 2)), k_hat=(0,))
        assert model.base.hi[vm.b[0, 0]] == 0.0
        assert np.isinf(model.base.hi[vm.b[0, 1]])

    def test_varmap_bijection(self):
        inst = tiny_instance(K=2, T=3, serves=[[0, 1], [1]])
        model, vm = build_deterministic(inst, state([0, 0]), np.zeros(2),
                                        np.zeros((2, 2)))
        idx = np.concatenate([
            vm.y.ravel(), vm.x.ravel(), vm.s[vm.s >= 0].ravel(),
            vm.i.ravel(), vm.b[vm.b >= 0].ravel(), vm.v.ravel(),
        ])
        assert sorted(idx.tolist()) == list(range(model.base.n_vars))


class TestCcExtensive:
    def test_cardinality_rhs(self):
        inst = tiny_instance(K=1, T=3, alpha=0.95, serves=[[0]])
        scen = np.full((100, 1), 5.0)
        model, vm = build_cc_extensive(inst, state([0.0]), np.zeros(1), scen,
                                       np.zeros((1, 1)))
        row = [r for r, tag in zip(model.base.rows, vm.row_tags)
               if tag == "cardinality"]
        assert len(row) == 1
        assert row[0][3] == pytest.approx(5.0)  # floor(0.05 * 100)

    def test_two_scenarios_cover_choice(self):
        # alpha=0.5 with 2 scenarios allows one uncovered; a large backlog
        # penalty pushes the plan to cover the larger scenario too
        inst = tiny_instance(K=1, T=2, alpha=0.5, serves=[[0]],
                             c_setup=1.0, c_hold=0.01, c_back2=100.0)
        scen = np.array([[4.0], [8.0]])
        model, vm = build_cc_extensive(inst, state([0.0]), np.zeros(1), scen,
                                       np.zeros((0, 1)))
        res = solve_milp(model)
        assert res.status is MilpStatus.OPTIMAL
        assert res.x[vm.v[0, 0]] == pytest.approx(8.0, abs=1e-5)

    def test_single_zero_scenario_matches_deterministic(self):
        inst = tiny_instance(K=2, T=3, alpha=0.9, serves=[[0, 1], [1]])
        st = state([3.0, 1.0], d_last=np.array([2.0, 2.0]))
        d1 = np.array([1.0, 2.0])
        tail = np.array([[4.0, 3.0]])
        scen = np.zeros((1, 2))
        d_bar = np.vstack([np.zeros(2), tail])
        ext, _ = build_cc_extensive(inst, st, d1, scen, tail)
        det, _ = build_deterministic(inst, st, d1, d_bar)
        r_ext = solve_milp(ext)
        r_det = solve_milp(det)
        assert r_ext.status is MilpStatus.OPTIMAL
        assert r_ext.objective == pytest.approx(r_det.objective, abs=1e-6)

    def test_recombination_identities(self, rng):
        inst = random_small_instance(rng, K=3, T=4, alpha=0.7)
        st = random_state(rng, 3)
        scen = rng.uniform(0, 10, (8, 3))
        tail = rng.uniform(0, 8, (2, 3))
        model, vm = build_cc_extensive(inst, st, rng.uniform(0, 5, 3), scen, tail)
        res = solve_milp(model)
        assert res.status is MilpStatus.OPTIMAL
        i2 = res.x[vm.i[1]]
        b2 = res.x[vm.b[1]]
        assert np.allclose(res.x[vm.i_scen].mean(axis=0), i2, atol=1e-6)
        assert np.allclose(res.x[vm.b_scen].mean(axis=0), b2, atol=1e-6)

    def test_flow_conservation(self, rng):
        inst = random_small_instance(rng, K=2, T=3, alpha=0.6)
        st = random_state(rng, 2)
        scen = rng.uniform(0, 10, (5, 2))
        tail = rng.uniform(0, 8, (1, 2))
        model, vm = build_cc_extensive(inst, st, rng.uniform(0, 5, 2), scen, tail)
        res = solve_milp(model)
        assert res.status is MilpStatus.OPTIMAL
        assert np.all(np.abs(flow_residuals(inst, vm, res.x)) <= 1e-6)


class TestCcMaster:
    def test_variable_count_difference(self):
        inst = tiny_instance(K=2, T=3, alpha=0.8, serves=[[0, 1], [1]])
        st = state([1.0, 1.0])
        scen = np.full((10, 2), 3.0)
        tail = np.zeros((1, 2))
        ext, _ = build_cc_extensive(inst, st, np.zeros(2), scen, tail)
        mas, _ = build_cc_master(inst, st, np.zeros(2), scen, tail)
        n_arcs = len(inst.arcs)
        assert ext.base.n_vars - mas.base.n_vars == 10 * (2 + n_arcs)

    def test_master_without_cuts_is_relaxation(self, rng):
        inst = random_small_instance(rng, K=2, T=3, alpha=0.6)
        st = random_state(rng, 2)
        scen = rng.uniform(0, 10, (6, 2))
        tail = rng.uniform(0, 8, (1, 2))
        d1 = rng.uniform(0, 5, 2)
        ext, _ = build_cc_extensive(inst, st, d1, scen, tail)
        mas, _ = build_cc_master(inst, st, d1, scen, tail)
        r_ext = solve_milp(ext)
        r_mas = solve_milp(mas)  # no callback: logical constraints dropped
        assert r_mas.objective <= r_ext.objective + 1e-6

    def test_master_with_cuts_matches_extensive(self, rng):
        for _ in range(4):
            inst = random_small_instance(rng)
            K = inst.K
            st = random_state(rng, K)
            n_scen = int(rng.integers(2, 12))
            scen = rng.uniform(0, 12, (n_scen, K))
            tail = rng.uniform(0, 8, (inst.T - 2, K))
            d1 = rng.uniform(0, 6, K)
            ext, _ = build_cc_extensive(inst, st, d1, scen, tail)
            mas, vm = build_cc_master(inst, st, d1, scen, tail)
            r_ext = solve_milp(ext)
            r_mas = solve_milp(mas, callback=cc_cut_callback(inst, scen, vm))
            assert r_ext.status is MilpStatus.OPTIMAL
            assert r_mas.status is MilpStatus.OPTIMAL
            assert r_mas.objective == pytest.approx(
                r_ext.objective, rel=1e-6, abs=1e-6)

    def test_dump_is_readable(self):
        inst = tiny_instance(K=1, T=2, serves=[[0]])
        model, vm = build_deterministic(inst, state([0.0]), np.zeros(1),
                                        np.array([[5.0]]))
        text = dump_lp_text(model, vm)
        assert text.startswith("min ")
        assert "demand_p1" in text
