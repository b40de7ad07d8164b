import math
import unittest

import numpy as np
from numpy.testing import assert_allclose

from triradical.errors import ContractError, RejectedInputError
from triradical.states import (BlochVector, DensityMatrix, Family, bloch_of, coherence_c1, coherence_c1_star,
                               coherence_c1_star_stack, environment_state, initial_system_state, maximally_mixed,
                               partial_trace, qubit_from_bloch, random_density_matrix, random_pure_state, reduce_pair,
                               sample_bloch, sample_initial_family, tensor, von_neumann_entropy)


class TestConstruction(unittest.TestCase):

    def test_rejects_bad_shapes(self):
        with self.assertRaises(RejectedInputError):
            DensityMatrix(np.eye(3) / 3)
        with self.assertRaises(RejectedInputError):
            DensityMatrix(np.ones((2, 4)))

    def test_checked(self):
        with self.assertRaises(RejectedInputError):
            DensityMatrix.checked(np.array([[0.5, 0.3], [0.0, 0.5]]))
        with self.assertRaises(RejectedInputError):
            DensityMatrix.checked(np.diag([1.5, -0.5]))
        DensityMatrix.checked(np.diag([0.5, 0.25]))

    def test_read_only(self):
        rho = maximally_mixed(2)
        with self.assertRaises(ValueError):
            rho.matrix[0, 0] = 1.0

    def test_bloch(self):
        r = BlochVector(0.1, -0.4, 0.5)
        rho = qubit_from_bloch(r)
        self.assertAlmostEqual(rho.trace, 1.0)
        assert_allclose(bloch_of(rho).r, r.r, atol=1e-15)
        with self.assertRaises(RejectedInputError):
            qubit_from_bloch([0.8, 0.8, 0.0])

    def test_initial_states(self):
        r = BlochVector(0.0, 0.0, 0.6)
        rho_s = initial_system_state(r)
        self.assertEqual(rho_s.dim, 8)
        self.assertAlmostEqual(rho_s.trace, 1.0)
        assert_allclose(partial_trace(rho_s, ['C']).matrix, np.eye(2) / 2, atol=1e-15)
        assert_allclose(partial_trace(rho_s, ['B']).matrix, qubit_from_bloch(r).matrix, atol=1e-15)
        rho_e = environment_state(r)
        assert_allclose(partial_trace(rho_e, [2]).matrix, qubit_from_bloch(r).matrix, atol=1e-15)


class TestSampling(unittest.TestCase):

    def test_families(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            r = sample_bloch(rng, Family.BALL_UNIFORM)
            self.assertLessEqual(r.norm, 1.0)
            z = sample_bloch(rng, 'zaxis')
            self.assertTrue(z.is_diagonal)
            self.assertLessEqual(abs(z.z), 1.0)

    def test_seeded(self):
        a = [sample_bloch(np.random.default_rng(11), 'ball') for _ in range(2)]
        self.assertEqual(a[0], a[1])

    def test_unknown_family(self):
        with self.assertRaises(RejectedInputError):
            sample_bloch(np.random.default_rng(0), 'sphere')

    def test_initial_family(self):
        rho = sample_initial_family(np.random.default_rng(12), Family.Z_AXIS)
        expected = initial_system_state(sample_bloch(np.random.default_rng(12), Family.Z_AXIS))
        assert_allclose(rho.matrix, expected.matrix, atol=0)
        assert_allclose(rho.matrix, np.diag(np.diag(rho.matrix)), atol=0)
        assert_allclose(initial_system_state(BlochVector()).matrix, np.eye(8) / 8, atol=1e-15)

    def test_ball_radius_distribution(self):
        rng = np.random.default_rng(13)
        radii = [sample_bloch(rng, Family.BALL_UNIFORM).norm for _ in range(100_000)]
        self.assertAlmostEqual(float(np.mean(radii)), 0.75, delta=0.01)

    def test_seeded_streams_are_identical(self):
        for family in Family:
            a, b = np.random.default_rng(14), np.random.default_rng(14)
            for _ in range(20):
                np.testing.assert_array_equal(sample_initial_family(a, family).matrix,
                                              sample_initial_family(b, family).matrix)


class TestEntropy(unittest.TestCase):

    def test_von_neumann(self):
        self.assertAlmostEqual(von_neumann_entropy(maximally_mixed(8)), 3.0)
        rho = random_pure_state(np.random.default_rng(1), 8)
        self.assertAlmostEqual(von_neumann_entropy(rho), 0.0, places=9)

    def test_entropy_ignores_trace_unless_raw(self):
        rho = random_density_matrix(np.random.default_rng(2), 4)
        scaled = rho.scaled(0.3)
        self.assertAlmostEqual(von_neumann_entropy(scaled), von_neumann_entropy(rho))
        raw = von_neumann_entropy(scaled, raw=True)
        self.assertAlmostEqual(raw, 0.3 * von_neumann_entropy(rho) - 0.3 * math.log2(0.3))

    def test_coherence(self):
        self.assertAlmostEqual(coherence_c1(maximally_mixed(8)), 0.0)
        rho = random_pure_state(np.random.default_rng(4), 8)
        self.assertAlmostEqual(coherence_c1(rho), 3.0, places=9)
        with self.assertRaises(ContractError):
            coherence_c1(rho.scaled(0.5))

    def test_decayed_coherence_scales_with_trace(self):
        rho = random_density_matrix(np.random.default_rng(5), 8)
        for t in (1.0, 0.4, 1e-3):
            self.assertAlmostEqual(coherence_c1_star(rho.scaled(t)), t * coherence_c1(rho), places=10)

    def test_coherence_of_a_stack(self):
        rng = np.random.default_rng(15)
        states = [random_density_matrix(rng, 8).scaled(t) for t in (1.0, 0.5, 0.01)] + [maximally_mixed(8)]
        got = coherence_c1_star_stack(np.array([s.matrix for s in states]))
        assert_allclose(got, [coherence_c1_star(s) for s in states], atol=1e-12)
        with self.assertRaises(RejectedInputError):
            coherence_c1_star_stack(np.zeros((1, 2, 2)))


class TestReductions(unittest.TestCase):

    def test_partial_trace_of_product(self):
        rng = np.random.default_rng(6)
        a, b, c = (random_density_matrix(rng, 2) for _ in range(3))
        joint = tensor(a, b, c)
        assert_allclose(partial_trace(joint, ['A', 'C']).matrix, tensor(a, c).matrix, atol=1e-14)
        assert_allclose(partial_trace(joint, [1]).matrix, b.matrix, atol=1e-14)
        with self.assertRaises(RejectedInputError):
            partial_trace(joint, ['E_A'])
        with self.assertRaises(RejectedInputError):
            partial_trace(joint, [])

    def test_reduce_pair(self):
        rng = np.random.default_rng(8)
        x = random_density_matrix(rng, 4)
        y = random_density_matrix(rng, 8)
        m = np.kron(x.matrix, y.matrix)
        assert_allclose(reduce_pair(m, (4, 8), 0), x.matrix, atol=1e-14)
        assert_allclose(reduce_pair(m, (4, 8), 1), y.matrix, atol=1e-14)


if __name__ == '__main__':
    unittest.main()
