import numpy as np
import pytest

from maxplus_mdp import (CoverageError, Dictionary, eval_dictionary, maxplus_dot,
                         project_lower, project_upper, residuate, transpose_apply,
                         transpose_residuate)

import oracles

NEG_INF = float("-inf")


def two_cell_dictionary():
    # indicators of {0,1} and {2} on S = {0,1,2}
    return Dictionary(np.array([[0.0, 0.0, NEG_INF], [NEG_INF, NEG_INF, 0.0]]))


def random_dictionary(rng, m, S):
    return Dictionary(oracles.random_covering_table(rng, m, S))


class TestEvalDictionary:
    def test_single_constant_atom(self):
        W = Dictionary(np.zeros((1, 4)))
        np.testing.assert_array_equal(eval_dictionary(W, [2.5]), np.full(4, 2.5))

    def test_two_cell_example(self):
        V = eval_dictionary(two_cell_dictionary(), [1.0, 2.0])
        np.testing.assert_array_equal(V, [1.0, 1.0, 2.0])

    def test_all_neg_inf_coefficients(self):
        V = eval_dictionary(two_cell_dictionary(), [NEG_INF, NEG_INF])
        assert np.isneginf(V).all()

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            eval_dictionary(two_cell_dictionary(), [1.0])

    def test_matches_oracle_randomized(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            table = oracles.random_covering_table(rng, 4, 6)
            alpha = rng.uniform(-2, 2, size=4)
            got = eval_dictionary(Dictionary(table), alpha)
            np.testing.assert_allclose(got, oracles.mp_eval(table, alpha), atol=1e-12)


class TestResiduate:
    def test_constant_atom_gives_min(self):
        W = Dictionary(np.zeros((1, 3)))
        np.testing.assert_array_equal(residuate(W, [4.0, -1.0, 2.0]), [-1.0])

    def test_two_cell_example(self):
        np.testing.assert_array_equal(
            residuate(two_cell_dictionary(), [1.0, 3.0, 2.0]), [1.0, 2.0])

    def test_galois_inflation(self):
        rng = np.random.default_rng(1)
        W = random_dictionary(rng, 4, 6)
        alpha = rng.uniform(-1, 1, size=4)
        assert (residuate(W, eval_dictionary(W, alpha)) >= alpha - 1e-12).all()

    def test_atom_without_support_errors(self):
        W = Dictionary(np.array([[0.0, 0.0], [NEG_INF, NEG_INF]]))
        with pytest.raises(CoverageError):
            residuate(W, [1.0, 2.0])

    def test_matches_oracle_randomized(self):
        rng = np.random.default_rng(2)
        for _ in range(30):
            table = oracles.random_covering_table(rng, 5, 7)
            V = rng.uniform(-3, 3, size=7)
            got = residuate(Dictionary(table), V)
            np.testing.assert_allclose(got, oracles.mp_residuate(table, V), atol=1e-12)


class TestTransposeApply:
    def test_zero_atom_takes_max(self):
        Z = Dictionary(np.zeros((1, 3)))
        np.testing.assert_array_equal(transpose_apply(Z, [1.0, 3.0, 2.0]), [3.0])

    def test_partial_support(self):
        Z = Dictionary(np.array([[5.0, NEG_INF]]))
        np.testing.assert_array_equal(transpose_apply(Z, [1.0, 2.0]), [6.0])

    def test_duality_with_residuation(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            Z = random_dictionary(rng, 4, 6)
            V = rng.uniform(-2, 2, size=6)
            lhs = transpose_apply(Z, V)
            rhs = -residuate(Z, -V)
            np.testing.assert_allclose(lhs, rhs, atol=1e-12)


class TestTransposeResiduate:
    def test_identity_with_negated_eval(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            Z = random_dictionary(rng, 4, 6)
            beta = rng.uniform(-2, 2, size=4)
            lhs = transpose_residuate(Z, beta)
            rhs = -eval_dictionary(Z, -beta)
            np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_single_zero_atom_is_constant(self):
        Z = Dictionary(np.zeros((1, 5)))
        np.testing.assert_array_equal(transpose_residuate(Z, [3.0]), np.full(5, 3.0))

    def test_two_cell_example(self):
        np.testing.assert_array_equal(
            transpose_residuate(two_cell_dictionary(), [4.0, 7.0]), [4.0, 4.0, 7.0])

    def test_uncovered_state_errors(self):
        Z = Dictionary(np.array([[0.0, NEG_INF]]))
        with pytest.raises(CoverageError):
            transpose_residuate(Z, [1.0])


class TestProjections:
    def test_singleton_partition_is_identity(self):
        W = Dictionary(np.where(np.eye(4) > 0, 0.0, NEG_INF))
        V = np.array([0.5, -1.0, 2.0, 0.0])
        np.testing.assert_array_equal(project_lower(W, V), V)
        np.testing.assert_array_equal(project_upper(W, V), V)

    def test_two_cell_examples(self):
        W = two_cell_dictionary()
        V = [1.0, 3.0, 2.0]
        np.testing.assert_array_equal(project_lower(W, V), [1.0, 1.0, 2.0])
        np.testing.assert_array_equal(project_upper(W, V), [3.0, 3.0, 2.0])

    def test_bracketing_and_idempotence(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            W = random_dictionary(rng, 4, 8)
            V = rng.uniform(-2, 2, size=8)
            lo, up = project_lower(W, V), project_upper(W, V)
            assert (lo <= V + 1e-12).all() and (up >= V - 1e-12).all()
            np.testing.assert_allclose(project_lower(W, lo), lo, atol=1e-12)
            np.testing.assert_allclose(project_upper(W, up), up, atol=1e-12)

    def test_matches_oracles(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            table = oracles.random_covering_table(rng, 3, 7)
            V = rng.uniform(-2, 2, size=7)
            W = Dictionary(table)
            np.testing.assert_allclose(project_lower(W, V), oracles.mp_lower(table, V),
                                       atol=1e-12)
            np.testing.assert_allclose(project_upper(W, V), oracles.mp_upper(table, V),
                                       atol=1e-12)


class TestMaxplusDot:
    def test_zero_atom(self):
        assert maxplus_dot(np.zeros(3), [1.0, 3.0, 2.0]) == 3.0

    def test_cancellation(self):
        V = np.array([1.0, -2.0, 0.5])
        assert maxplus_dot(-V, V) == 0.0

    def test_adjunction(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            Z = random_dictionary(rng, 4, 6)
            V = rng.uniform(-2, 2, size=6)
            beta = rng.uniform(-2, 2, size=4)
            lhs = maxplus_dot(transpose_apply(Z, V), beta)
            rhs = maxplus_dot(V, eval_dictionary(Z, beta))
            assert abs(lhs - rhs) <= 1e-12


class TestValidation:
    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            Dictionary(np.array([[np.nan, 0.0]]))

    def test_rejects_pos_inf(self):
        with pytest.raises(ValueError):
            eval_dictionary(two_cell_dictionary(), [np.inf, 0.0])

    def test_rejects_empty_dictionary(self):
        with pytest.raises(ValueError):
            Dictionary(np.zeros((0, 3)))
