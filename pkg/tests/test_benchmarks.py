import numpy as np
import pytest

from maxplus_mdp import (VALUE_SPECS, build_1d, build_2d,
                         build_benchmark, error_metrics, reward_from_value,
                         reward_from_value_1d, value_iteration)


class TestValueSpecs:
    def test_bumps_formula_values(self):
        spec = VALUE_SPECS["v1d_bumps"]
        x = np.array([[0.0], [0.5], [1.0]])
        np.testing.assert_allclose(spec.value(x), [1.0, 1.0, 2.0])

    def test_convex_formula_values(self):
        spec = VALUE_SPECS["v1d_convex"]
        x = np.array([[0.0], [0.5], [1.0]])
        np.testing.assert_allclose(spec.value(x), [1.0, 0.0, 2.0])

    def test_2d_additivity(self):
        # the full 2-D value is the sparse part in x0 plus the same shape in x1
        sparse = VALUE_SPECS["v2d_sparse"]
        full = VALUE_SPECS["v2d_full"]
        rng = np.random.default_rng(0)
        X = rng.uniform(0, 1, size=(50, 2))
        np.testing.assert_allclose(
            full.value(X), sparse.value(X) + sparse.value(X[:, ::-1]), atol=1e-12)

    def test_left_derivative_convention_at_kinks(self):
        spec = VALUE_SPECS["v1d_convex"]
        g = spec.grad_left(np.array([[1.0 / 3.0], [2.0 / 3.0]]))[:, 0]
        np.testing.assert_allclose(g, [-3.0, 0.0])


class TestRewardConstruction:
    def test_zero_value_gives_zero_reward(self):
        spec = VALUE_SPECS["v1d_convex"]
        b = reward_from_value_1d(spec, 0.5)
        # on the flat zero plateau both V and V' vanish
        np.testing.assert_allclose(b(np.array([0.5, 0.6])), [0.0, 0.0], atol=1e-12)

    def test_hjb_identity_at_left_endpoint(self):
        b = reward_from_value_1d(VALUE_SPECS["v1d_convex"], 0.5)
        expect = -1.0 * np.log(0.5) - 3.0
        assert b(np.array([0.0]))[0] == pytest.approx(expect)

    def test_no_discount_leaves_gradient_term(self):
        b = reward_from_value_1d(VALUE_SPECS["v1d_convex"], 1.0)
        assert b(np.array([0.0]))[0] == pytest.approx(-3.0)

    def test_2d_uses_largest_partial(self):
        b = reward_from_value(VALUE_SPECS["v2d_full"], 0.919)
        x = np.array([[0.0, 0.5]])  # slopes -3 and 0
        expect = -2.0 * np.log(0.919) * 0.5 - 3.0  # V = 1 here
        assert b(x)[0] == pytest.approx(-VALUE_SPECS["v2d_full"].value(x)[0]
                                        * np.log(0.919) - 3.0)


class TestBuild1d:
    def test_printed_constants(self):
        bench = build_1d(VALUE_SPECS["v1d_bumps"], 362, 0.5)
        assert bench.gamma == pytest.approx(0.9981, abs=5e-4)
        assert bench.horizon == pytest.approx(521, abs=1)

    def test_boundary_self_loops(self):
        bench = build_1d(VALUE_SPECS["v1d_convex"], 16, 0.5)
        M = bench.mdp
        first = dict(zip(zip(M.src.tolist(), M.dst.tolist()), M.reward))
        assert first[(0, 0)] == pytest.approx((1 - bench.gamma) * 1.0)
        assert first[(15, 15)] == pytest.approx((1 - bench.gamma) * 2.0)
        # interior states move both ways only
        assert M.edge_count == 2 * 14 + 2

    def test_boundary_value_is_geometric_series(self):
        bench = build_1d(VALUE_SPECS["v1d_convex"], 32, 0.5)
        V, _, res = value_iteration(bench.mdp, tol=1e-12)
        tol_v = 1e-12 / (1 - bench.gamma)
        assert abs(V[0] - 1.0) <= tol_v + 1e-9
        assert abs(V[-1] - 2.0) <= tol_v + 1e-9

    @pytest.mark.parametrize("spec_id", ["v1d_bumps", "v1d_convex"])
    def test_discretization_error_shrinks(self, spec_id):
        errors = []
        for nodes in (91, 181, 362):
            bench = build_1d(VALUE_SPECS[spec_id], nodes, 0.5)
            tol = 1e-8 * max(np.ptp(bench.mdp.reward), 1e-12)
            V, _, _ = value_iteration(bench.mdp, tol=tol)
            errors.append(error_metrics(V, bench.v_star)[1])
        assert errors[2] <= errors[1] <= errors[0]
        # error at the coarsest level calibrates the constant C in C * delta
        C = errors[0] / (1.0 / 90)
        assert errors[2] <= C * (1.0 / 361) + 1e-9


class TestBuild2d:
    def test_printed_constants(self):
        bench = build_2d(VALUE_SPECS["v2d_sparse"], 45, 0.919)
        assert bench.mdp.state_count == 2025
        assert bench.gamma == pytest.approx(0.9981, abs=5e-4)
        assert bench.horizon == pytest.approx(521, abs=1)

    def test_sparse_vstar_constant_along_second_dim(self):
        bench = build_2d(VALUE_SPECS["v2d_sparse"], 45, 0.919)
        vs = bench.v_star.reshape(45, 45)
        assert np.abs(vs - vs[:, :1]).max() == 0.0

    def test_boundary_states_absorb(self):
        bench = build_2d(VALUE_SPECS["v2d_sparse"], 7, 0.9)
        M = bench.mdp
        idx = bench.grid.indices
        boundary = ((idx == 0) | (idx == 6)).any(axis=1)
        for s in np.flatnonzero(boundary):
            lo, hi = M.indptr[s], M.indptr[s + 1]
            assert hi - lo == 1 and M.dst[lo] == s

    def test_interior_moves_are_axis_steps(self):
        bench = build_2d(VALUE_SPECS["v2d_full"], 7, 0.9)
        M = bench.mdp
        idx = bench.grid.indices
        interior = ((idx > 0) & (idx < 6)).all(axis=1)
        for s in np.flatnonzero(interior)[:5]:
            nbrs = sorted(M.dst[M.indptr[s]:M.indptr[s + 1]].tolist())
            assert nbrs == sorted([s - 7, s - 1, s + 1, s + 7])

    def test_discretization_error_shrinks(self):
        errors = []
        for nodes in (12, 23, 45):
            bench = build_2d(VALUE_SPECS["v2d_sparse"], nodes, 0.919)
            V, _, _ = value_iteration(bench.mdp, tol=1e-8)
            errors.append(error_metrics(V, bench.v_star)[1])
        assert errors[2] <= errors[1] <= errors[0]


class TestErrorMetrics:
    def test_exact_match_is_zero(self):
        v = np.arange(5.0)
        assert error_metrics(v, v) == (0.0, 0.0)

    def test_constant_offset(self):
        v = np.arange(5.0)
        assert error_metrics(v + 0.25, v) == (0.25, 0.25)

    def test_l1_below_linf(self):
        rng = np.random.default_rng(1)
        v = rng.uniform(-1, 1, 20)
        noise = rng.uniform(-0.5, 0.5, 20)
        l1, linf = error_metrics(v + noise, v)
        assert l1 <= linf <= 0.5


class TestDispatcher:
    def test_unknown_id_rejected(self):
        with pytest.raises(ValueError, match="unknown benchmark"):
            build_benchmark("nope")

    def test_defaults(self):
        b = build_benchmark("v1d_convex")
        assert b.mdp.state_count == 362 and b.eta == 0.5
        b2 = build_benchmark("v2d_full", nodes=9)
        assert b2.mdp.state_count == 81 and b2.eta == 0.919
