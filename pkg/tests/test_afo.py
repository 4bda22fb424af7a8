import itertools

import numpy as np
import pytest

from conftest import random_bqp
from oracles import all_points, exhaustive_bqp_min, quad_values
from walshbo.afo import (BqpProblem, SubmodularQuadratic, bqp_value,
                         bqp_values, brute_force_minimize, build_bqp,
                         graphcut_minimize, local_search_minimize, relax,
                         split_posneg, submodular_relaxation_solve,
                         theta_objective)
from walshbo.errors import ConfigurationError, NonSubmodularError
from walshbo.features import enumerate_subsets, feature_matrix


def example_bqp():
    # beta = 0, theta = (0, 1, -1, 2) over n = 2
    return build_bqp(np.array([0.0, 1.0, -1.0, 2.0]),
                     enumerate_subsets(2, 2, beta=0.0))


class TestBuildBqp:
    def test_frozen_example(self):
        p = example_bqp()
        assert p.constant == pytest.approx(2.0)
        np.testing.assert_allclose(p.linear, [-6.0, -2.0])
        assert p.quadratic[0, 1] == pytest.approx(8.0)

    def test_zero_theta(self):
        basis = enumerate_subsets(3, 2, beta=0.5)
        p = build_bqp(np.zeros(basis.size), basis)
        assert p.constant == 0.0
        np.testing.assert_array_equal(p.linear, 0.0)
        np.testing.assert_array_equal(p.quadratic, 0.0)
        np.testing.assert_array_equal(bqp_values(p, all_points(3)), 0.0)

    def test_reproduces_sampled_objective_exhaustively(self):
        rng = np.random.default_rng(0)
        for n in (2, 3, 5, 8, 12):
            basis = enumerate_subsets(n, 2, beta=0.5)
            theta = rng.normal(size=basis.size)
            p = build_bqp(theta, basis)
            pts = all_points(n)
            expected = feature_matrix(pts, basis) @ theta
            np.testing.assert_allclose(bqp_values(p, pts), expected, atol=1e-10)

    def test_rejects_wrong_order_or_length(self):
        with pytest.raises(ConfigurationError):
            build_bqp(np.zeros(4), enumerate_subsets(3, 1, beta=0.5))
        with pytest.raises(ConfigurationError):
            build_bqp(np.zeros(5), enumerate_subsets(3, 2, beta=0.5))


class TestBqpValue:
    def test_zero_point_gives_constant(self):
        p = example_bqp()
        assert bqp_value(p, [0, 0]) == p.constant

    def test_all_ones(self):
        rng = np.random.default_rng(1)
        p = random_bqp(5, rng)
        expected = p.constant + p.linear.sum() + p.quadratic.sum()
        assert bqp_value(p, np.ones(5, int)) == pytest.approx(expected)

    def test_frozen_example_point(self):
        assert bqp_value(example_bqp(), [1, 0]) == pytest.approx(-4.0)


class TestSplitPosneg:
    def test_sign_split(self):
        quad = np.zeros((3, 3))
        quad[0, 1] = 8.0
        quad[0, 2] = -3.0
        p = BqpProblem(n=3, constant=0.0, linear=np.zeros(3), quadratic=quad)
        pos, neg = split_posneg(p)
        assert pos[0, 1] == 8.0 and pos[0, 2] == 0.0
        assert neg[0, 2] == -3.0 and neg[0, 1] == 0.0
        np.testing.assert_array_equal(pos + neg, quad)

    def test_pure_signs(self):
        rng = np.random.default_rng(2)
        p = random_bqp(6, rng, submodular=True)
        pos, neg = split_posneg(p)
        np.testing.assert_array_equal(pos, 0.0)
        np.testing.assert_array_equal(neg, p.quadratic)
        flipped = BqpProblem(n=6, constant=p.constant, linear=p.linear,
                             quadratic=-p.quadratic)
        pos, neg = split_posneg(flipped)
        np.testing.assert_array_equal(pos, flipped.quadratic)
        np.testing.assert_array_equal(neg, 0.0)


class TestRelax:
    def test_no_positive_terms_identity(self):
        rng = np.random.default_rng(3)
        p = random_bqp(5, rng, submodular=True)
        q = relax(p, np.full((5, 5), 0.5))
        assert q.constant == p.constant
        np.testing.assert_array_equal(q.linear, p.linear)
        np.testing.assert_array_equal(q.quadratic, p.quadratic)

    def test_gamma_zero_drops_positive_terms(self):
        rng = np.random.default_rng(4)
        p = random_bqp(5, rng)
        q = relax(p, np.zeros((5, 5)))
        assert q.constant == p.constant
        np.testing.assert_array_equal(q.linear, p.linear)
        _, neg = split_posneg(p)
        np.testing.assert_array_equal(q.quadratic, neg)

    def test_gamma_one_tight_at_both_ones(self):
        quad = np.zeros((2, 2))
        quad[0, 1] = 8.0
        p = BqpProblem(n=2, constant=1.0, linear=np.array([-3.0, 2.0]),
                       quadratic=quad)
        q = relax(p, np.ones((2, 2)))
        x = np.array([1, 1])
        relaxed = quad_values(q.constant, q.linear, q.quadratic, x[None, :])[0]
        assert relaxed == pytest.approx(bqp_value(p, x))

    def test_lower_bounds_everywhere(self):
        rng = np.random.default_rng(5)
        for n in (3, 6, 10):
            p = random_bqp(n, rng)
            pts = all_points(n)
            originals = bqp_values(p, pts)
            for _ in range(5):
                gamma = rng.uniform(0.0, 1.0, (n, n))
                q = relax(p, gamma)
                relaxed = quad_values(q.constant, q.linear, q.quadratic, pts)
                assert np.all(relaxed <= originals + 1e-9)

    def test_rejects_out_of_range_gamma(self):
        rng = np.random.default_rng(6)
        p = random_bqp(4, rng)
        if not np.any(p.quadratic > 0):  # ensure support exists
            p.quadratic[0, 1] = abs(p.quadratic[0, 1]) + 1.0
        with pytest.raises(ConfigurationError):
            relax(p, np.full((4, 4), 1.5))


class TestGraphcutMinimize:
    def test_frozen_two_variable_example(self, kernel_lane):
        quad = np.zeros((2, 2))
        quad[0, 1] = -1.0
        q = SubmodularQuadratic(0.0, np.array([1.0, -2.0]), quad)
        x, value = graphcut_minimize(q)
        assert value == pytest.approx(-2.0)
        np.testing.assert_array_equal(x, [0, 1])

    def test_all_zero_coefficients(self, kernel_lane):
        q = SubmodularQuadratic(0.0, np.zeros(4), np.zeros((4, 4)))
        x, value = graphcut_minimize(q)
        assert value == 0.0
        np.testing.assert_array_equal(x, np.zeros(4))

    def test_matches_brute_force_on_random_instances(self, kernel_lane):
        rng = np.random.default_rng(7)
        for _ in range(60):
            n = int(rng.integers(2, 15))
            p = random_bqp(n, rng, submodular=True)
            q = SubmodularQuadratic(p.constant, p.linear, p.quadratic)
            x, value = graphcut_minimize(q)
            x_ref, v_ref = exhaustive_bqp_min(p)
            assert value == pytest.approx(v_ref, abs=1e-6)
            np.testing.assert_array_equal(x, x_ref)

    def test_rejects_non_submodular(self, kernel_lane):
        quad = np.zeros((2, 2))
        quad[0, 1] = 1.0
        with pytest.raises(NonSubmodularError):
            SubmodularQuadratic(0.0, np.zeros(2), quad)
        ok = SubmodularQuadratic(0.0, np.zeros(2), np.zeros((2, 2)))
        ok.quadratic[0, 1] = 1.0  # mutate behind the constructor
        with pytest.raises(NonSubmodularError):
            graphcut_minimize(ok)

    def test_lanes_agree(self):
        from walshbo import _kernels
        if _kernels.native is None:
            pytest.skip("compiled kernels not built")
        rng = np.random.default_rng(8)
        for _ in range(40):
            n = int(rng.integers(2, 20))
            p = random_bqp(n, rng, submodular=True)
            q = SubmodularQuadratic(p.constant, p.linear, p.quadratic)
            outs = []
            for lane in (_kernels.pure, _kernels.native):
                saved = _kernels.maxflow_mincut
                _kernels.maxflow_mincut = lane.maxflow_mincut
                try:
                    outs.append(graphcut_minimize(q))
                finally:
                    _kernels.maxflow_mincut = saved
            np.testing.assert_array_equal(outs[0][0], outs[1][0])
            assert outs[0][1] == outs[1][1]


class TestSubmodularRelaxationSolve:
    def test_submodular_input_exact_in_one_iteration(self, kernel_lane):
        rng = np.random.default_rng(9)
        for _ in range(10):
            n = int(rng.integers(2, 15))
            p = random_bqp(n, rng, submodular=True)
            x, value, state = submodular_relaxation_solve(p)
            _, v_ref = exhaustive_bqp_min(p)
            assert value == pytest.approx(v_ref, abs=1e-9)
            assert len(state.bound_trace) == 1

    def test_single_positive_entry_two_vars(self, kernel_lane):
        quad = np.zeros((2, 2))
        quad[0, 1] = 3.0
        p = BqpProblem(n=2, constant=0.5, linear=np.array([-2.0, -1.0]),
                       quadratic=quad)
        x, value, _ = submodular_relaxation_solve(p, iterations=5)
        _, v_ref = exhaustive_bqp_min(p)
        assert value == pytest.approx(v_ref, abs=1e-9)

    def test_bounds_sandwich_minimum(self, kernel_lane):
        rng = np.random.default_rng(10)
        for _ in range(25):
            n = int(rng.integers(2, 15))
            p = random_bqp(n, rng)
            x, value, state = submodular_relaxation_solve(p)
            _, v_ref = exhaustive_bqp_min(p)
            assert value == pytest.approx(bqp_value(p, x))
            assert value >= v_ref - 1e-9
            for bound in state.bound_trace:
                assert bound <= v_ref + 1e-9

    def test_best_bound_trace_monotone(self, kernel_lane):
        rng = np.random.default_rng(11)
        p = random_bqp(12, rng)
        _, _, state = submodular_relaxation_solve(p, iterations=8)
        best = np.maximum.accumulate(state.bound_trace)
        assert np.all(np.diff(best) >= 0)
        assert state.best_bound == best[-1]

    def test_constant_shift_invariance(self, kernel_lane):
        rng = np.random.default_rng(12)
        p = random_bqp(8, rng)
        shifted = BqpProblem(n=8, constant=p.constant + 5.0, linear=p.linear,
                             quadratic=p.quadratic)
        x0, v0, _ = submodular_relaxation_solve(p)
        x1, v1, _ = submodular_relaxation_solve(shifted)
        np.testing.assert_array_equal(x0, x1)
        assert v1 == pytest.approx(v0 + 5.0)

    def test_rejects_bad_iterations(self):
        rng = np.random.default_rng(13)
        with pytest.raises(ConfigurationError):
            submodular_relaxation_solve(random_bqp(4, rng), iterations=0)


class TestBruteForce:
    def test_constant_problem_returns_zero_point(self, kernel_lane):
        p = BqpProblem(n=4, constant=5.0, linear=np.zeros(4),
                       quadratic=np.zeros((4, 4)))
        x, value = brute_force_minimize(p)
        assert value == 5.0
        np.testing.assert_array_equal(x, np.zeros(4))

    def test_frozen_example(self, kernel_lane):
        x, value = brute_force_minimize(example_bqp())
        assert value == pytest.approx(-4.0)
        np.testing.assert_array_equal(x, [1, 0])

    def test_beats_random_points(self, kernel_lane):
        rng = np.random.default_rng(14)
        p = random_bqp(12, rng)
        _, value = brute_force_minimize(p)
        samples = rng.integers(0, 2, (1000, 12))
        assert value <= bqp_values(p, samples).min() + 1e-12

    def test_tie_break_lowest_code(self, kernel_lane):
        # symmetric two-variable problem with minimizers (0,1) and (1,0)
        quad = np.zeros((2, 2))
        quad[0, 1] = 2.0
        p = BqpProblem(n=2, constant=0.0, linear=np.array([-1.0, -1.0]),
                       quadratic=quad)
        x, value = brute_force_minimize(p)
        assert value == pytest.approx(-1.0)
        np.testing.assert_array_equal(x, [0, 1])

    def test_refuses_above_cap(self):
        p = BqpProblem(n=24, constant=0.0, linear=np.zeros(24),
                       quadratic=np.zeros((24, 24)))
        with pytest.raises(ConfigurationError):
            brute_force_minimize(p)

    def test_lanes_agree(self):
        from walshbo import _kernels
        if _kernels.native is None:
            pytest.skip("compiled kernels not built")
        rng = np.random.default_rng(15)
        for _ in range(20):
            n = int(rng.integers(2, 13))
            p = random_bqp(n, rng)
            code_p = _kernels.pure.bqp_scan(p.constant, p.linear, p.quadratic)
            code_n = _kernels.native.bqp_scan(p.constant, p.linear, p.quadratic)
            assert code_p[0] == code_n[0]
            assert code_p[1] == pytest.approx(code_n[1], abs=1e-9)


class TestLocalSearch:
    def test_sandwich_property(self, kernel_lane):
        rng = np.random.default_rng(16)
        n = 10
        basis = enumerate_subsets(n, 2, beta=0.4)
        theta = rng.normal(size=basis.size)
        x, value = local_search_minimize(theta, basis, restarts=20, rng_seed=0)
        assert value == pytest.approx(
            float(theta_objective(theta, basis, x[None, :])[0]), abs=1e-9)
        pts = all_points(n)
        exact = theta_objective(theta, basis, pts).min()
        start_best = theta_objective(
            theta, basis, np.random.default_rng(0).integers(0, 2, (20, n))).min()
        assert exact - 1e-9 <= value <= start_best + 1e-9

    def test_separable_objective_exact(self):
        rng = np.random.default_rng(17)
        n = 8
        basis = enumerate_subsets(n, 1, beta=0.3)
        theta = rng.normal(size=basis.size)
        x, value = local_search_minimize(theta, basis, restarts=1, rng_seed=5)
        expected = theta_objective(theta, basis, all_points(n)).min()
        assert value == pytest.approx(expected, abs=1e-10)

    def test_seed_determinism(self):
        rng = np.random.default_rng(18)
        basis = enumerate_subsets(7, 3, beta=0.2)
        theta = rng.normal(size=basis.size)
        a = local_search_minimize(theta, basis, restarts=5, rng_seed=42)
        b = local_search_minimize(theta, basis, restarts=5, rng_seed=42)
        np.testing.assert_array_equal(a[0], b[0])
        assert a[1] == b[1]

    def test_order_three_descends(self):
        rng = np.random.default_rng(19)
        n = 9
        basis = enumerate_subsets(n, 3, beta=0.3)
        theta = rng.normal(size=basis.size)
        x, value = local_search_minimize(theta, basis, restarts=10, rng_seed=1)
        exact = theta_objective(theta, basis, all_points(n)).min()
        assert value >= exact - 1e-9
        # no single-bit flip improves the endpoint
        for i in range(n):
            y = x.copy()
            y[i] ^= 1
            assert theta_objective(theta, basis, y[None, :])[0] >= value - 1e-9
