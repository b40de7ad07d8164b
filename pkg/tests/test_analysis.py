import math
import unittest

import numpy as np
from numpy.testing import assert_allclose

from triradical.analysis import (COMMUTANT_TOL, GENERIC_TOL, TrivialStateParams, check_exchange_symmetry,
                                 check_zeeman_commutant, commutator_norms, faulty_exchange, run_verification,
                                 sample_trivial_params, trivial_family_residual, trivial_state, verification_angles,
                                 verify_lemma3, verify_unitality)
from triradical.errors import RejectedInputError
from triradical.model import FieldAngles, SensorParams, h_exchange, singlet_projector, total_spin
from triradical.pauli import PauliSum, from_dense
from triradical.states import initial_system_state, maximally_mixed, random_density_matrix, tensor

PARAMS = SensorParams()


class TestAngles(unittest.TestCase):

    def test_axes_first(self):
        angles = verification_angles(10)
        self.assertEqual(len(angles), 10)
        dirs = np.array([a.direction for a in angles[:6]])
        assert_allclose(dirs, [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], atol=1e-15)
        for a in angles:
            self.assertAlmostEqual(float(np.linalg.norm(a.direction)), 1.0)

    def test_minimum(self):
        with self.assertRaises(RejectedInputError):
            verification_angles(5)


class TestTrivialFamily(unittest.TestCase):

    def test_zero_parameters_give_maximally_mixed(self):
        assert_allclose(trivial_state(TrivialStateParams()).matrix, np.eye(8) / 8, atol=1e-15)

    def test_rejects_non_positive(self):
        with self.assertRaises(RejectedInputError):
            trivial_state(TrivialStateParams(p_ab=1.0))

    def test_sampled_states_commute_with_every_field(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            rho = trivial_state(sample_trivial_params(rng))
            self.assertAlmostEqual(rho.trace, 1.0)
            self.assertLessEqual(check_zeeman_commutant(rho, 20), COMMUTANT_TOL)
            self.assertLessEqual(trivial_family_residual(rho), 1e-12)

    def test_generic_states_do_not(self):
        rng = np.random.default_rng(1)
        rho = random_density_matrix(rng, 8)
        self.assertGreater(check_zeeman_commutant(rho, 20), GENERIC_TOL)
        self.assertGreater(trivial_family_residual(rho), 1e-3)

    def test_triplet_pair_state(self):
        # Triplet of A, B with C maximally mixed
        rho = trivial_state(TrivialStateParams(p_ab=1 / 24))
        self.assertLessEqual(check_zeeman_commutant(rho, 20), COMMUTANT_TOL)
        assert_allclose(rho.eigenvalues(), [0.0, 0.0] + [1 / 6] * 6, atol=1e-12)


class TestCommutators(unittest.TestCase):

    def test_pauli_and_dense_agree(self):
        angles = verification_angles(12)
        norms = commutator_norms(h_exchange(PARAMS), PauliSum.zero(), PARAMS, angles)
        self.assertTrue(norms.vanishes)
        self.assertTrue(norms.consistent)
        rho = tensor(initial_system_state([0.2, 0.3, 0.1]), maximally_mixed(8))
        norms = commutator_norms(from_dense(rho.matrix), PauliSum.zero(), PARAMS, angles)
        self.assertFalse(norms.vanishes)
        self.assertTrue(norms.consistent)
        assert_allclose(norms.pauli, norms.dense, atol=1e-12)

    def test_exchange_symmetry(self):
        self.assertTrue(check_exchange_symmetry(PARAMS).passed)
        bad = check_exchange_symmetry(PARAMS, faulty_exchange(PARAMS))
        self.assertFalse(bad.passed)
        self.assertEqual(bad.verdict, 'FAIL')

    def test_faulty_exchange_flips_one_term(self):
        diff = faulty_exchange(PARAMS) - h_exchange(PARAMS)
        self.assertEqual(dict(diff.terms), {'XXIIII': 1.0})

    def test_singlet_projector_commutes_with_field(self):
        for a in (FieldAngles(0.0, 0.0), FieldAngles(1.0, 2.0)):
            norms = commutator_norms(singlet_projector(), PauliSum.zero(), PARAMS, [a])
            self.assertTrue(norms.vanishes)
        spin = total_spin('Y')
        self.assertTrue(commutator_norms(singlet_projector(), spin, PARAMS).vanishes)


class TestLemmas(unittest.TestCase):

    def test_maximally_mixed_joint_state(self):
        flags = verify_lemma3(PARAMS, maximally_mixed(64), 12)
        self.assertFalse(flags.state)
        self.assertTrue(flags.projector)
        self.assertTrue(flags.field)
        self.assertTrue(flags.consistent)

    def test_polarized_state(self):
        rho = tensor(initial_system_state([0.0, 0.0, 0.9]), maximally_mixed(8))
        flags = verify_lemma3(PARAMS, rho, 12)
        self.assertTrue(flags.state and flags.projector and flags.field)
        self.assertGreater(flags.weakest, 0.0)

    def test_unitality(self):
        res = verify_unitality(PARAMS, np.random.default_rng(2), samples=3)
        self.assertTrue(res.passed, res)
        self.assertLessEqual(res.residual, 1e-12)

    def test_suite(self):
        results = run_verification(PARAMS, samples=3, n_angles=10, seed=5)
        names = [r.name for r in results]
        self.assertEqual(len(names), len(set(names)))
        for r in results:
            self.assertTrue(r.passed, r)
            self.assertTrue(math.isfinite(r.residual), r)

    def test_suite_detects_fault(self):
        results = {r.name: r for r in run_verification(PARAMS, samples=2, n_angles=8, seed=5, inject_fault=True)}
        self.assertFalse(results['exchange_total_spin'].passed)


if __name__ == '__main__':
    unittest.main()
