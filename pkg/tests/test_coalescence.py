import math
import unittest
from dataclasses import replace

import numpy as np

from kaclab.config import DEFAULT_CONFIG
from kaclab.coupling.nonmarkov import (
    build_nm_coupling,
    coalesce_attempt,
    complete_trace,
    invert_induced_map,
    sample_induced_spec,
)
from kaclab.errors import CouplingNumericsExhausted, DomainError
from kaclab.group.so_n import haar_sample, mat_exp_skew, project_skew, rotation_matrix
from kaclab.jacobian.induced_map import InducedMapSpec, induced_map_eval
from kaclab.utils.diagnostics import ks_statistic


def nearby(X: np.ndarray, distance: float, rng: np.random.Generator) -> np.ndarray:
    direction = project_skew(rng.standard_normal(X.shape))
    return X @ mat_exp_skew(distance * direction / np.linalg.norm(direction))


def interval_spec(theta: float, epsilon: float) -> InducedMapSpec:
    return InducedMapSpec(X=np.eye(2), T=1, S=[0], planes=[1], eta=[theta], c=epsilon)


class InversionTests(unittest.TestCase):
    def setUp(self) -> None:
        self.rng = np.random.default_rng(101)

    def test_recovers_known_preimage(self) -> None:
        for _ in range(5):
            spec = sample_induced_spec(3, 1.0, 0.05, "lazy", self.rng, base=haar_sample(3, self.rng))
            x_star = self.rng.uniform(-0.025, 0.025, size=spec.dimension)
            result = invert_induced_map(spec, induced_map_eval(spec, x_star), np.zeros(spec.dimension))
            self.assertTrue(result.converged)
            np.testing.assert_allclose(result.x, x_star, atol=1e-8)
            self.assertLessEqual(result.residual, DEFAULT_CONFIG.newton_tolerance)

    def test_origin_is_an_exact_fixed_point(self) -> None:
        spec = sample_induced_spec(4, None, 0.05, "greedy", self.rng)
        result = invert_induced_map(spec, induced_map_eval(spec, np.zeros(spec.dimension)), np.zeros(spec.dimension))
        self.assertTrue(result.converged)
        self.assertEqual(result.iterations, 0)
        np.testing.assert_allclose(result.x, np.zeros(spec.dimension), atol=1e-8)

    def test_unreachable_target_does_not_converge(self) -> None:
        spec = sample_induced_spec(3, None, 0.05, "greedy", self.rng)
        target = induced_map_eval(spec, np.zeros(spec.dimension)) @ rotation_matrix(3, 2, 2.5)
        result = invert_induced_map(spec, target, np.zeros(spec.dimension))
        self.assertFalse(result.converged)

    def test_initial_guess_validation(self) -> None:
        spec = sample_induced_spec(3, None, 0.05, "greedy", self.rng)
        with self.assertRaises(DomainError):
            invert_induced_map(spec, np.eye(3), np.zeros(spec.dimension + 1))
        with self.assertRaises(DomainError):
            invert_induced_map(spec, np.eye(3), np.full(spec.dimension, 0.2))


class ScaffoldTests(unittest.TestCase):
    def setUp(self) -> None:
        self.rng = np.random.default_rng(202)

    def test_identical_start_gives_identical_maps(self) -> None:
        X0 = haar_sample(3, self.rng)
        spec_a, spec_b, trace = build_nm_coupling(X0, X0, 1.0, 0.05, "lazy", self.rng)
        np.testing.assert_array_equal(spec_a.eta, spec_b.eta)
        np.testing.assert_array_equal(spec_a.S, spec_b.S)
        zero = np.zeros(spec_a.dimension)
        np.testing.assert_array_equal(induced_map_eval(spec_a, zero), induced_map_eval(spec_b, zero))
        self.assertTrue(np.all(np.isnan(trace.dist_main)))
        self.assertEqual(trace.horizon, spec_a.T)

    def test_scaffold_endpoints_stay_close(self) -> None:
        close = 0
        for _ in range(30):
            X0 = haar_sample(3, self.rng)
            spec_a, spec_b, trace = build_nm_coupling(X0, nearby(X0, 1e-6, self.rng), 1.0, 0.05, "lazy", self.rng)
            zero = np.zeros(spec_a.dimension)
            gap = float(np.linalg.norm(induced_map_eval(spec_a, zero) - induced_map_eval(spec_b, zero)))
            self.assertAlmostEqual(gap, trace.dist_scaffold[-1], delta=1e-12)
            close += gap <= 1e-3
        self.assertGreaterEqual(close, 27)

    def test_rejects_wide_perturbation(self) -> None:
        with self.assertRaises(DomainError):
            build_nm_coupling(np.eye(3), np.eye(3), 1.0, 4.0, "lazy", self.rng)
        with self.assertRaises(DomainError):
            build_nm_coupling(np.eye(3), np.eye(4), 1.0, 0.05, "lazy", self.rng)


class CoalescenceTests(unittest.TestCase):
    def setUp(self) -> None:
        self.rng = np.random.default_rng(303)

    def test_identical_maps_always_coalesce(self) -> None:
        for flavor in ("greedy", "lazy"):
            X0 = haar_sample(3, self.rng)
            spec_a, spec_b, trace = build_nm_coupling(X0, X0, 1.0, 0.05, flavor, self.rng)
            for _ in range(10):
                result = coalesce_attempt(spec_a, spec_b, self.rng)
                self.assertTrue(result.coalesced)
                np.testing.assert_array_equal(result.delta_x, result.delta_y)
                self.assertEqual(result.proposals, 1)
            completed = complete_trace(trace, spec_a, spec_b, result)
            self.assertTrue(completed.coalesced)
            self.assertEqual(completed.coalescence_step, spec_a.T)
            np.testing.assert_array_equal(completed.dist_main, np.zeros(spec_a.T + 1))

    def test_disjoint_images_never_coalesce(self) -> None:
        spec_a = sample_induced_spec(3, None, 0.05, "greedy", self.rng)
        spec_b = InducedMapSpec(
            X=rotation_matrix(3, 1, math.pi), T=spec_a.T, S=spec_a.S, planes=spec_a.planes, eta=spec_a.eta, c=spec_a.c
        )
        for _ in range(20):
            self.assertFalse(coalesce_attempt(spec_a, spec_b, self.rng).coalesced)

    def test_coalesced_draw_maps_to_the_same_point(self) -> None:
        spec_a = interval_spec(1.0, 0.05)
        spec_b = interval_spec(1.02, 0.05)
        for _ in range(50):
            result = coalesce_attempt(spec_a, spec_b, self.rng)
            if result.coalesced:
                np.testing.assert_allclose(
                    induced_map_eval(spec_a, result.delta_x), induced_map_eval(spec_b, result.delta_y), atol=1e-10
                )
                self.assertAlmostEqual(result.delta_y[0], result.delta_x[0] - 0.02, delta=1e-9)
            self.assertLessEqual(np.max(np.abs(result.delta_y)), 0.05)

    def test_incompatible_maps(self) -> None:
        with self.assertRaises(DomainError):
            coalesce_attempt(interval_spec(1.0, 0.05), interval_spec(1.0, 0.06), self.rng)

    def test_proposal_cap_exhausts(self) -> None:
        config = replace(DEFAULT_CONFIG, max_proposals=0)
        with self.assertRaises(CouplingNumericsExhausted) as context:
            coalesce_attempt(interval_spec(1.0, 0.05), interval_spec(1.0, 0.05), self.rng, config)
        self.assertEqual(context.exception.diagnostics["proposals"], 1)

    def test_complete_trace_records_final_gap(self) -> None:
        X0 = haar_sample(3, self.rng)
        spec_a, spec_b, trace = build_nm_coupling(X0, nearby(X0, 1e-3, self.rng), 1.0, 0.05, "lazy", self.rng)
        result = coalesce_attempt(spec_a, spec_b, self.rng)
        completed = complete_trace(trace, spec_a, spec_b, result)
        self.assertAlmostEqual(completed.dist_main[0], trace.dist_scaffold[0], places=14)
        expected = float(
            np.linalg.norm(induced_map_eval(spec_a, result.delta_x) - induced_map_eval(spec_b, result.delta_y))
        )
        self.assertAlmostEqual(completed.extras["final_gap"], expected, places=10)
        if result.coalesced:
            self.assertEqual(completed.dist_main[-1], 0.0)
        else:
            self.assertAlmostEqual(completed.dist_main[-1], expected, places=10)


class IntervalCouplingTests(unittest.TestCase):
    """Two arcs of half-width 0.05 whose centres are 0.03 apart overlap with probability 0.7."""

    epsilon = 0.05
    trials = 10_000

    @classmethod
    def setUpClass(cls) -> None:
        rng = np.random.default_rng(313)
        lower, upper = interval_spec(1.0, cls.epsilon), interval_spec(1.03, cls.epsilon)
        cls.forward = [coalesce_attempt(lower, upper, rng) for _ in range(cls.trials)]
        cls.swapped = [coalesce_attempt(upper, lower, rng) for _ in range(cls.trials)]

    def uniform_cdf(self, x: np.ndarray) -> np.ndarray:
        return np.clip((x + self.epsilon) / (2 * self.epsilon), 0.0, 1.0)

    def rate(self, results: list) -> float:
        return float(np.mean([result.coalesced for result in results]))

    def test_overlap_probability(self) -> None:
        self.assertAlmostEqual(self.rate(self.forward), 1 - 0.03 / (2 * self.epsilon), delta=0.02)

    def test_role_swap_is_symmetric(self) -> None:
        self.assertAlmostEqual(self.rate(self.swapped), 0.7, delta=0.02)
        self.assertAlmostEqual(self.rate(self.swapped), self.rate(self.forward), delta=0.02)

    def test_pooled_marginals_are_uniform(self) -> None:
        for results in (self.forward, self.swapped):
            delta_x = np.array([result.delta_x[0] for result in results])
            delta_y = np.array([result.delta_y[0] for result in results])
            self.assertLess(ks_statistic(delta_x, self.uniform_cdf), 0.02)
            self.assertLess(ks_statistic(delta_y, self.uniform_cdf), 0.02)
            self.assertLessEqual(float(np.max(np.abs(delta_y))), self.epsilon)


class NearbyStartCoalescenceTests(unittest.TestCase):
    def setUp(self) -> None:
        self.rng = np.random.default_rng(323)

    def coalescence_rate(self, swap: bool, trials: int = 200) -> float:
        hits = 0
        for _ in range(trials):
            X0 = haar_sample(3, self.rng)
            spec_a, spec_b, _ = build_nm_coupling(X0, nearby(X0, 1e-6, self.rng), 1.0, 0.05, "lazy", self.rng)
            if swap:
                spec_a, spec_b = spec_b, spec_a
            try:
                hits += coalesce_attempt(spec_a, spec_b, self.rng).coalesced
            except CouplingNumericsExhausted:
                pass
        return hits / trials

    def test_close_starts_usually_coalesce(self) -> None:
        self.assertGreaterEqual(self.coalescence_rate(swap=False), 0.5)

    def test_close_starts_coalesce_in_either_order(self) -> None:
        self.assertGreaterEqual(self.coalescence_rate(swap=True), 0.5)


if __name__ == "__main__":
    unittest.main()
