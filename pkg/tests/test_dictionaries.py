import numpy as np
import pytest

from maxplus_mdp import (BregmanAffineAtom, DeterministicMdp, Dictionary, DistanceAtom,
                         Grid, IndicatorAtom, Partition, TabulatedAtom,
                         dictionary_from_json, dictionary_to_json, evaluate_atom,
                         k_center_cover, lipschitz_estimate, make_bregman_dictionary,
                         make_distance_dictionary, make_partition_dictionary,
                         partition_from_json, partition_to_json, project_lower,
                         project_upper, reduced_mdp_from_partition,
                         single_cell_partition, split_box_cell, uniform_box_partition,
                         voronoi_partition)

import oracles

NEG_INF = float("-inf")


class TestAtoms:
    def test_indicator_values(self):
        a = IndicatorAtom((0, 2))
        assert evaluate_atom(a, 0) == 0.0
        assert evaluate_atom(a, 1) == NEG_INF
        np.testing.assert_array_equal(a.tabulate(3), [0.0, NEG_INF, 0.0])

    def test_indicator_rejects_empty_cell(self):
        with pytest.raises(ValueError):
            IndicatorAtom(())

    def test_distance_at_center_and_offset(self):
        grid = Grid((5,))  # x = 0, .25, .5, .75, 1
        a = DistanceAtom((0.75,), 2.0)
        assert evaluate_atom(a, 3, grid) == 0.0
        assert evaluate_atom(a, 1, grid) == -1.0  # 2 * |0.25 - 0.75|
        np.testing.assert_allclose(a.tabulate(5, grid), [-1.5, -1.0, -0.5, 0.0, -0.5])

    def test_distance_rejects_bad_scale(self):
        with pytest.raises(ValueError):
            DistanceAtom((0.5,), 0.0)

    def test_distance_dims_subset(self):
        grid = Grid((3, 3))
        a = DistanceAtom((0.0, 0.0), 1.0, dims=(0,))
        # only coordinate 0 contributes
        assert evaluate_atom(a, grid.state_of((2, 0)), grid) == -1.0
        assert evaluate_atom(a, grid.state_of((0, 2)), grid) == 0.0

    def test_bregman_values(self):
        grid = Grid((3,))  # x = 0, .5, 1
        a = BregmanAffineAtom((2.0,), curvature=1.0)
        np.testing.assert_allclose(a.tabulate(3, grid), [0.0, 0.875, 1.5])
        assert evaluate_atom(a, 2, grid) == pytest.approx(1.5)

    def test_tabulated(self):
        a = TabulatedAtom((1.0, NEG_INF))
        assert evaluate_atom(a, 1) == NEG_INF
        np.testing.assert_array_equal(a.tabulate(2), [1.0, NEG_INF])


class TestPartitions:
    def test_singleton_partition_dictionary(self):
        P = Partition(np.arange(4))
        W = make_partition_dictionary(P)
        assert W.size == 4

    def test_two_cell_projections_match_cell_extrema(self):
        P = Partition(np.array([0, 0, 1]))
        W = make_partition_dictionary(P)
        V = np.array([1.0, 3.0, 2.0])
        np.testing.assert_array_equal(project_lower(W, V), [1.0, 1.0, 2.0])
        np.testing.assert_array_equal(project_upper(W, V), [3.0, 3.0, 2.0])

    def test_projections_are_cell_extrema_randomized(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            S = int(rng.integers(3, 20))
            m = int(rng.integers(1, min(S, 6) + 1))
            cell_of = oracles.random_partition_cells(rng, m, S)
            P = Partition(cell_of)
            W = make_partition_dictionary(P)
            V = rng.uniform(-2, 2, size=S)
            lo, up = project_lower(W, V), project_upper(W, V)
            for c, cell in enumerate(P.cells):
                np.testing.assert_allclose(lo[cell], V[cell].min(), atol=1e-12)
                np.testing.assert_allclose(up[cell], V[cell].max(), atol=1e-12)

    def test_rejects_empty_cell_id(self):
        with pytest.raises(ValueError):
            Partition(np.array([0, 2, 2]))

    def test_uniform_box_partition_covers(self):
        grid = Grid((6, 4))
        P = uniform_box_partition(grid, (3, 2))
        assert P.n_cells == 6
        assert sorted(np.concatenate(P.cells).tolist()) == list(range(24))

    def test_split_box_cell(self):
        grid = Grid((8,))
        P = single_cell_partition(grid)
        P2, mid = split_box_cell(P, 0, 0, grid)
        assert mid == 3
        assert P2.n_cells == 2
        assert sorted(P2.cells[0].tolist()) == [0, 1, 2, 3]
        assert sorted(P2.cells[1].tolist()) == [4, 5, 6, 7]

    def test_split_single_node_extent_errors(self):
        grid = Grid((2, 2))
        P = uniform_box_partition(grid, (2, 2))
        with pytest.raises(ValueError):
            split_box_cell(P, 0, 0, grid)

    def test_json_round_trip(self):
        grid = Grid((4, 4))
        P = uniform_box_partition(grid, (2, 2))
        P2 = partition_from_json(partition_to_json(P))
        np.testing.assert_array_equal(P2.cell_of, P.cell_of)
        np.testing.assert_array_equal(P2.boxes[3], P.boxes[3])


class TestKCenter:
    def test_full_cover_zero_radius(self):
        grid = Grid((6,))
        cover = k_center_cover(grid, 6)
        assert cover.radius == 0.0

    def test_against_exhaustive_optimum_1d(self):
        for S in (8, 12):
            grid = Grid((S,))
            for n in (2, 3, 4):
                cover = k_center_cover(grid, n)
                opt = oracles.kcenter_optimal_radius(grid.coords, n)
                assert opt <= cover.radius <= 2 * opt + 1e-12

    def test_factored_bound_2d(self):
        # optimal 2d radius with n = m^2 centers is at most the per-axis
        # optimal radius with m centers, for the linf metric
        grid2 = Grid((5, 5))
        grid1 = Grid((5,))
        opt2 = oracles.kcenter_optimal_radius(grid2.coords, 4, metric="linf")
        opt1 = oracles.kcenter_optimal_radius(grid1.coords, 2, metric="linf")
        assert opt2 <= opt1 + 1e-12

    def test_deterministic(self):
        grid = Grid((20,))
        c1 = k_center_cover(grid, 5)
        c2 = k_center_cover(grid, 5)
        np.testing.assert_array_equal(c1.centers, c2.centers)
        # nested prefixes for growing n
        c3 = k_center_cover(grid, 3)
        np.testing.assert_array_equal(c1.centers[:3], c3.centers)


class TestVoronoi:
    def test_single_center(self):
        grid = Grid((5,))
        cover = k_center_cover(grid, 1)
        P = voronoi_partition(cover, grid)
        assert P.n_cells == 1

    def test_four_point_grid(self):
        from maxplus_mdp.dictionaries import CoverResult
        grid = Grid((4,))
        P = voronoi_partition(CoverResult(np.array([0, 3]), 0.0), grid)
        assert sorted(P.cells[0].tolist()) == [0, 1]
        assert sorted(P.cells[1].tolist()) == [2, 3]

    def test_cell_diameter_bound(self):
        rng = np.random.default_rng(1)
        grid = Grid((17,))
        for n in (2, 3, 5):
            cover = k_center_cover(grid, n)
            P = voronoi_partition(cover, grid)
            for cell in P.cells:
                xs = grid.coords[cell, 0]
                assert xs.max() - xs.min() <= 2 * cover.radius + 1e-12


class TestDistanceDictionary:
    def test_single_center_cone(self):
        grid = Grid((5,))
        W = make_distance_dictionary(np.array([2]), 1.0, grid)
        np.testing.assert_allclose(W.table[0], [-0.5, -0.25, 0.0, -0.25, -0.5])

    def test_exact_reconstruction_with_all_centers(self):
        # centers everywhere and scale >= discrete Lipschitz constant
        rng = np.random.default_rng(2)
        grid = Grid((9,))
        V = np.cumsum(rng.uniform(-0.3, 0.3, size=9))
        lip = lipschitz_estimate(V, grid)
        W = make_distance_dictionary(np.arange(9), lip + 1e-9, grid)
        np.testing.assert_allclose(project_lower(W, V), V, atol=1e-10)

    def test_covering_error_bound(self):
        # || V - lower projection || <= 2 c max_s min_w d(w, s) when c >= Lip
        rng = np.random.default_rng(3)
        grid = Grid((21,))
        V = np.cumsum(rng.uniform(-0.2, 0.2, size=21))
        c = max(lipschitz_estimate(V, grid), 1e-6)
        centers = np.array([2, 9, 17])
        W = make_distance_dictionary(centers, c, grid)
        maxmin = grid.distances(grid.coords[centers]).min(axis=0).max()
        gap = np.max(np.abs(V - project_lower(W, V)))
        assert gap <= 2 * c * maxmin + 1e-12


class TestBregmanDictionary:
    def test_small_curvature_is_nearly_linear(self):
        grid = Grid((5,))
        W = make_bregman_dictionary([[1.0]], grid, curvature=1e-12)
        np.testing.assert_allclose(W.table[0], grid.coords[:, 0], atol=1e-10)

    def test_convex_envelope_oracle_hull_slopes(self):
        # with atoms at the lower-hull slopes of V + h, the lower projection
        # recovers envelope(V + h) - h exactly, convex or not
        rng = np.random.default_rng(4)
        grid = Grid((15,))
        x = grid.coords[:, 0]
        for _ in range(10):
            V = rng.uniform(-1, 1, size=15)
            f = V + 0.5 * x ** 2
            env = oracles.convex_envelope_values(x, f)
            vertices = np.flatnonzero(np.abs(env - f) < 1e-12)
            slopes = np.diff(f[vertices]) / np.diff(x[vertices])
            W = make_bregman_dictionary(slopes[:, None], grid, curvature=1.0)
            np.testing.assert_allclose(project_lower(W, V), env - 0.5 * x ** 2,
                                       atol=1e-10)

    def test_quadratic_exact_with_discrete_gradients(self):
        grid = Grid((12,))
        x = grid.coords[:, 0]
        V = 3.0 * (x - 0.4) ** 2  # V + h convex, so all discrete gradients work
        f = V + 0.5 * x ** 2
        slopes = np.diff(f) / np.diff(x)
        W = make_bregman_dictionary(slopes[:, None], grid, curvature=1.0)
        np.testing.assert_allclose(project_lower(W, V), V, atol=1e-10)


class TestReducedMdp:
    def test_singleton_partition_isomorphic(self):
        M = DeterministicMdp(2, [(0, 1, 1.0), (1, 0, 0.0)], 0.5)
        R = reduced_mdp_from_partition(M, Partition(np.arange(2)))
        assert R.state_count == 2 and R.edge_count == 2
        np.testing.assert_array_equal(R.reward, M.reward)

    def test_all_states_one_cell(self):
        M = DeterministicMdp(2, [(0, 1, 1.0), (1, 0, 0.0)], 0.5)
        R = reduced_mdp_from_partition(M, Partition(np.zeros(2, dtype=int)))
        assert R.state_count == 1
        assert R.reward[0] == 1.0  # max of the two edge rewards

    def test_cluster_range_bounded_by_original(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            M = oracles.random_mdp(rng, max_states=20)
            cell_of = oracles.random_partition_cells(rng, 4, M.state_count)
            R = reduced_mdp_from_partition(M, Partition(cell_of))
            assert R.reward.max() <= M.reward.max() + 1e-15
            assert R.reward.min() >= M.reward.min() - 1e-15


class TestLipschitz:
    def test_constant_is_zero(self):
        grid = Grid((7,))
        assert lipschitz_estimate(np.full(7, 3.0), grid) == 0.0

    def test_linear_slope_one(self):
        grid = Grid((11,))
        assert lipschitz_estimate(grid.coords[:, 0], grid) == pytest.approx(1.0)

    def test_benchmark_hinge_slopes(self):
        from maxplus_mdp import build_benchmark
        b = build_benchmark("v1d_convex")
        assert lipschitz_estimate(b.v_star, b.grid) == pytest.approx(6.0, abs=1e-9)

    def test_prop2_partition_bound(self):
        # piecewise-constant projection error <= Lip * (2 eta) for Voronoi cells
        from maxplus_mdp import build_benchmark
        b = build_benchmark("v1d_bumps", nodes=91)
        lip = lipschitz_estimate(b.v_star, b.grid)
        for n in (4, 8, 16):
            cover = k_center_cover(b.grid, n)
            P = voronoi_partition(cover, b.grid)
            W = make_partition_dictionary(P)
            gap = np.max(np.abs(b.v_star - project_lower(W, b.v_star)))
            assert gap <= lip * 2 * cover.radius + 1e-12


class TestSerialization:
    def test_dictionary_round_trip(self):
        grid = Grid((4,))
        atoms = [IndicatorAtom((0, 1)), DistanceAtom((0.5,), 2.0),
                 BregmanAffineAtom((1.5,), 0.5), TabulatedAtom((0.0, 1.0, NEG_INF, 2.0))]
        W = Dictionary.from_atoms(atoms, 4, grid)
        W2 = dictionary_from_json(dictionary_to_json(W), grid)
        np.testing.assert_allclose(W2.table, W.table)
        assert [type(a) for a in W2.atoms] == [type(a) for a in atoms]
