import math
import unittest

import numpy as np

from kaclab.coupling.nonmarkov import sample_induced_spec
from kaclab.errors import DegenerateVolumeError, DomainError
from kaclab.group.so_n import haar_sample, plane_count, sphere_coordinate_cdf
from kaclab.jacobian.induced_map import (
    InducedMapSpec,
    block_factorize,
    derivative_map,
    gram_matrix,
    gram_volume,
    induced_map_eval,
    left_derivatives,
    numerical_rank,
)
from kaclab.jacobian.matrices import JacobianMatrix, adjoint_entry_cdf, d_infinity, d_matrix
from kaclab.utils.diagnostics import ks_statistic
from kaclab.walk.chain import UpdateSequence, WalkState, random_update_sequence, run_walk


def identity_spec(n: int) -> InducedMapSpec:
    N = plane_count(n)
    return InducedMapSpec(X=np.eye(n), T=N, S=np.arange(N), planes=np.arange(1, N + 1), eta=np.zeros(N), c=0.05)


class InducedMapTests(unittest.TestCase):
    def setUp(self) -> None:
        self.rng = np.random.default_rng(404)
        self.spec = sample_induced_spec(4, 0.5, 0.05, "lazy", self.rng, base=haar_sample(4, self.rng))

    def test_origin_is_the_scaffold_endpoint(self) -> None:
        walk = run_walk(WalkState(self.spec.X), UpdateSequence(4, self.spec.planes, self.spec.eta))
        np.testing.assert_allclose(induced_map_eval(self.spec, np.zeros(self.spec.dimension)), walk.X, atol=1e-12)

    def test_matches_walk_with_perturbed_angles(self) -> None:
        for _ in range(10):
            x = self.rng.uniform(-0.05, 0.05, size=self.spec.dimension)
            walk = run_walk(WalkState(self.spec.X), UpdateSequence(4, self.spec.planes, self.spec.endpoint_angles(x)))
            np.testing.assert_allclose(induced_map_eval(self.spec, x), walk.X, atol=1e-12)

    def test_outside_box_raises(self) -> None:
        with self.assertRaises(DomainError):
            induced_map_eval(self.spec, np.full(self.spec.dimension, 0.06))
        with self.assertRaises(DomainError):
            induced_map_eval(self.spec, np.zeros(self.spec.dimension + 1))

    def test_spec_validation(self) -> None:
        with self.assertRaises(DomainError):
            InducedMapSpec(X=np.eye(3), T=3, S=[0, 0, 2], planes=[1, 2, 3], eta=[0, 0, 0], c=0.05)
        with self.assertRaises(DomainError):
            InducedMapSpec(X=np.eye(3), T=3, S=[0, 1, 2], planes=[1, 2], eta=[0, 0, 0], c=0.05)
        with self.assertRaises(DomainError):
            InducedMapSpec(X=np.eye(3), T=3, S=[0, 1, 2], planes=[1, 2, 3], eta=[0, 0, 0], c=4.0)


class BlockFactorizationTests(unittest.TestCase):
    def setUp(self) -> None:
        self.rng = np.random.default_rng(505)

    def test_identity_spec_has_identity_blocks(self) -> None:
        blocks = block_factorize(identity_spec(4))
        for block in blocks.unmarked:
            np.testing.assert_array_equal(block, np.eye(4))
        np.testing.assert_array_equal(blocks.tail, np.eye(4))

    def test_single_marked_step(self) -> None:
        spec = InducedMapSpec(X=np.eye(2), T=1, S=[0], planes=[1], eta=[0.3], c=0.05)
        blocks = block_factorize(spec)
        self.assertEqual(blocks.unmarked.shape, (1, 2, 2))
        np.testing.assert_array_equal(blocks.unmarked[0], np.eye(2))
        np.testing.assert_array_equal(blocks.tail, np.eye(2))

    def test_recomposition_matches_evaluation(self) -> None:
        spec = sample_induced_spec(3, 1.0, 0.05, "lazy", self.rng, base=haar_sample(3, self.rng))
        blocks = block_factorize(spec)
        for _ in range(10):
            x = self.rng.uniform(-0.05, 0.05, size=spec.dimension)
            np.testing.assert_allclose(blocks.compose(x), induced_map_eval(spec, x), atol=1e-12)


class DerivativeTests(unittest.TestCase):
    def setUp(self) -> None:
        self.rng = np.random.default_rng(606)
        self.spec = sample_induced_spec(3, 0.5, 0.05, "lazy", self.rng, base=haar_sample(3, self.rng))

    def test_zero_direction(self) -> None:
        x = self.rng.uniform(-0.05, 0.05, size=self.spec.dimension)
        np.testing.assert_array_equal(derivative_map(self.spec, x, np.zeros(self.spec.dimension)), np.zeros((3, 3)))

    def test_matches_central_differences(self) -> None:
        x = self.rng.uniform(-0.04, 0.04, size=self.spec.dimension)
        h = self.rng.standard_normal(self.spec.dimension)
        step = 1e-6
        numeric = (induced_map_eval(self.spec, x + step * h) - induced_map_eval(self.spec, x - step * h)) / (2 * step)
        np.testing.assert_allclose(derivative_map(self.spec, x, h), numeric, atol=1e-8)

    def test_left_derivatives_are_skew(self) -> None:
        _, derivatives = left_derivatives(self.spec, np.zeros(self.spec.dimension))
        for matrix in derivatives:
            np.testing.assert_allclose(matrix, -matrix.T, atol=1e-15)


class JacobianMatrixTests(unittest.TestCase):
    def setUp(self) -> None:
        self.rng = np.random.default_rng(707)

    def test_identity_rotations_give_identity(self) -> None:
        np.testing.assert_allclose(d_matrix(identity_spec(4)).D, np.eye(6), atol=1e-15)

    def test_single_plane(self) -> None:
        spec = InducedMapSpec(X=np.eye(2), T=1, S=[0], planes=[1], eta=[1.0], c=0.05)
        np.testing.assert_array_equal(d_matrix(spec).D, np.ones((1, 1)))

    def test_gram_identity(self) -> None:
        for n, flavor, Q in ((3, "lazy", 0.5), (4, "lazy", 0.5), (4, "greedy", None)):
            spec = sample_induced_spec(n, Q, 0.05, flavor, self.rng, base=haar_sample(n, self.rng))
            np.testing.assert_allclose(gram_matrix(spec, np.zeros(spec.dimension)), 2 * d_matrix(spec).D, atol=1e-8)

    def test_entries_bounded_by_one(self) -> None:
        spec = sample_induced_spec(4, None, 0.05, "greedy", self.rng)
        self.assertLessEqual(float(np.max(np.abs(d_matrix(spec).D))), 1.0 + 1e-12)

    def test_matrix_validation(self) -> None:
        with self.assertRaises(DomainError):
            JacobianMatrix(np.array([[1.0, 0.2], [0.1, 1.0]]))
        with self.assertRaises(DomainError):
            JacobianMatrix(np.array([[2.0, 0.0], [0.0, 1.0]]))


class HaarJacobianTests(unittest.TestCase):
    def setUp(self) -> None:
        self.rng = np.random.default_rng(808)

    def test_structure(self) -> None:
        D = d_infinity(4, self.rng)
        self.assertEqual(D.N, 6)
        np.testing.assert_array_equal(np.diagonal(D.D), np.ones(6))
        np.testing.assert_array_equal(D.D, D.D.T)
        np.testing.assert_array_equal(d_infinity(2, self.rng).D, np.ones((1, 1)))

    def test_structure_over_many_instances(self) -> None:
        for n in (3, 4, 5):
            for _ in range(1000):
                spec = sample_induced_spec(n, None, 0.05, "greedy", self.rng)
                for matrix in (d_infinity(n, self.rng).D, d_matrix(spec).D):
                    np.testing.assert_array_equal(matrix, matrix.T)
                    np.testing.assert_array_equal(np.diagonal(matrix), np.ones(plane_count(n)))
                    self.assertLessEqual(float(np.max(np.abs(matrix))), 1.0 + 1e-12)

    def test_fixed_seed_is_bit_reproducible(self) -> None:
        first = d_infinity(4, np.random.default_rng(5)).D
        second = d_infinity(4, np.random.default_rng(5)).D
        self.assertEqual(first.tobytes(), second.tobytes())
        self.assertNotEqual(first.tobytes(), d_infinity(4, np.random.default_rng(6)).D.tobytes())

    def test_entry_mean_is_zero(self) -> None:
        entries = np.array([d_infinity(3, self.rng).D[0, 1] for _ in range(5000)])
        self.assertLess(abs(entries.mean()), 0.03)

    def test_three_dimensional_entries_are_uniform(self) -> None:
        entries = np.array([d_infinity(3, self.rng).D[0, 2] for _ in range(4000)])
        self.assertLess(ks_statistic(entries, lambda x: adjoint_entry_cdf(3, x)), 0.03)
        self.assertLess(ks_statistic(entries, lambda x: sphere_coordinate_cdf(3, x)), 0.03)

    def test_four_dimensional_entries_are_triangular(self) -> None:
        entries = np.array([d_infinity(4, self.rng).D[0, 1] for _ in range(4000)])
        self.assertLess(ks_statistic(entries, lambda x: adjoint_entry_cdf(4, x)), 0.03)
        self.assertLess(ks_statistic(entries, lambda x: sphere_coordinate_cdf(6, x)), 0.04)

    def test_no_closed_form_beyond_four(self) -> None:
        with self.assertRaises(DomainError):
            adjoint_entry_cdf(5, 0.0)


class VolumeTests(unittest.TestCase):
    def setUp(self) -> None:
        self.rng = np.random.default_rng(909)

    def test_identity_spec_volume(self) -> None:
        spec = identity_spec(4)
        self.assertAlmostEqual(gram_volume(spec, np.zeros(6)), math.sqrt(2) ** 6, places=10)

    def test_single_block_volume(self) -> None:
        spec = InducedMapSpec(X=np.eye(2), T=1, S=[0], planes=[1], eta=[0.7], c=0.05)
        self.assertAlmostEqual(gram_volume(spec, np.array([0.01])), math.sqrt(2), places=12)

    def test_matches_finite_difference_gram(self) -> None:
        spec = sample_induced_spec(3, 0.5, 0.05, "lazy", self.rng, base=haar_sample(3, self.rng))
        x = self.rng.uniform(-0.04, 0.04, size=spec.dimension)
        step = 1e-6
        columns = []
        for j in range(spec.dimension):
            e = np.zeros(spec.dimension)
            e[j] = step
            columns.append(((induced_map_eval(spec, x + e) - induced_map_eval(spec, x - e)) / (2 * step)).reshape(-1))
        gram = np.array([[a @ b for b in columns] for a in columns])
        expected = math.sqrt(np.linalg.det(gram))
        self.assertAlmostEqual(gram_volume(spec, x) / expected, 1.0, delta=1e-4)

    def test_repeated_generator_is_degenerate(self) -> None:
        spec = InducedMapSpec(X=np.eye(3), T=3, S=[0, 1, 2], planes=[1, 1, 2], eta=[0, 0, 0], c=0.05)
        with self.assertLogs("kaclab.jacobian.induced_map", level="DEBUG") as logs:
            with self.assertRaises(DegenerateVolumeError):
                gram_volume(spec, np.zeros(3))
        self.assertIn("Degenerate Gram matrix", logs.output[0])


class NumericalRankTests(unittest.TestCase):
    def setUp(self) -> None:
        self.rng = np.random.default_rng(1010)

    def test_empty_prefix(self) -> None:
        self.assertEqual(numerical_rank(np.eye(3), [], []), 0)

    def test_short_prefix_is_rank_deficient(self) -> None:
        for _ in range(100):
            sequence = random_update_sequence(4, 4, self.rng)
            self.assertLessEqual(numerical_rank(haar_sample(4, self.rng), sequence.planes, sequence.angles), 4)

    def test_long_prefix_reaches_full_rank(self) -> None:
        full = 0
        for _ in range(50):
            sequence = random_update_sequence(3, 50, self.rng)
            full += numerical_rank(np.eye(3), sequence.planes, sequence.angles) == 3
        self.assertGreaterEqual(full, 49)


if __name__ == "__main__":
    unittest.main()
