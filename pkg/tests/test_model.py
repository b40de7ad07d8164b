import math
import unittest

import numpy as np
import scipy.linalg
from numpy.testing import assert_allclose

from triradical.errors import RejectedInputError
from triradical.model import (CNOT_CALIBRATION, SWAP_CALIBRATION, FieldAngles, InteractionKind, SensorParams,
                              h_exchange, h_zeeman, singlet_projector, total_hamiltonian, total_spin, v_interaction,
                              v_pair)
from triradical.pauli import PauliSum, embed


def cnot_a_ea() -> np.ndarray:
    # |0><0|_A (x) 1 + |1><1|_A (x) X_EA
    op = (PauliSum.identity(0.5) + embed({'A': 'Z'}, 0.5) + embed({'E_A': 'X'}, 0.5) +
          embed({'A': 'Z', 'E_A': 'X'}, -0.5))
    return op.dense


def swap_a_ea() -> np.ndarray:
    op = PauliSum.identity(0.5)
    for ax in 'XYZ':
        op = op + embed({'A': ax, 'E_A': ax}, 0.5)
    return op.dense


class TestParams(unittest.TestCase):

    def test_defaults(self):
        p = SensorParams()
        self.assertEqual(p.interaction_kind, InteractionKind.CNOT)
        self.assertEqual(p.j_se_tau, CNOT_CALIBRATION)
        self.assertEqual(p.period, 2.0)

    def test_swap_calibration(self):
        p = SensorParams().with_kind('swap')
        self.assertIs(p.interaction_kind, InteractionKind.SWAP)
        self.assertEqual(p.j_se, SWAP_CALIBRATION)

    def test_kind_switch_coupling(self):
        p = SensorParams(j_se_tau=0.5)
        self.assertEqual(p.with_kind('swap').j_se_tau, SWAP_CALIBRATION)
        kept = p.with_kind('swap', keep_coupling=True)
        self.assertIs(kept.interaction_kind, InteractionKind.SWAP)
        self.assertEqual(kept.j_se_tau, 0.5)

    def test_rejects_nonpositive_rates(self):
        for kw in ({'k': 0.0}, {'k': -1.0}, {'tau_se': 0.0}, {'tau_ee': float('nan')}):
            with self.assertRaises(RejectedInputError, msg=kw):
                SensorParams(**kw)
        with self.assertRaises(RejectedInputError):
            SensorParams(interaction_kind='iswap')

    def test_angles(self):
        assert_allclose(FieldAngles(0.0, 0.0).direction, [0, 0, 1], atol=1e-15)
        assert_allclose(FieldAngles(math.pi / 2, math.pi / 2).direction, [0, 1, 0], atol=1e-15)
        self.assertAlmostEqual(FieldAngles(2 * math.pi + 0.5, 1.0).theta, 0.5)
        with self.assertRaises(RejectedInputError):
            FieldAngles(0.0, 4.0)


class TestHamiltonians(unittest.TestCase):

    def test_exchange_conserves_total_spin(self):
        h = h_exchange(SensorParams(j_abc=0.7)).dense
        for ax in 'XYZ':
            s = total_spin(ax).dense
            assert_allclose(h @ s - s @ h, 0, atol=1e-12)

    def test_zero_exchange(self):
        self.assertFalse(h_exchange(SensorParams(j_abc=0.0)))

    def test_zeeman_along_x(self):
        p = SensorParams()
        got = h_zeeman(p, FieldAngles(0.0, math.pi / 2))
        assert_allclose(got.dense, total_spin('X').dense * 0.5 * p.gamma_b0, atol=1e-15)
        self.assertEqual(got.support(), frozenset({0, 1, 2}))

    def test_singlet_projector(self):
        p = singlet_projector().dense
        assert_allclose(p @ p, p, atol=1e-14)
        self.assertAlmostEqual(np.trace(p).real, 16.0)

    def test_cnot_collision(self):
        p = SensorParams()
        u = scipy.linalg.expm(-1j * v_pair(p, 'A').dense * p.tau_se)
        assert_allclose(u, cnot_a_ea(), atol=1e-12)

    def test_swap_collision(self):
        p = SensorParams(interaction_kind='swap')
        u = scipy.linalg.expm(-1j * v_pair(p, 'A').dense * p.tau_se)
        phase = u[0, 0]
        self.assertAlmostEqual(abs(phase), 1.0, places=12)
        assert_allclose(u, phase * swap_a_ea(), atol=1e-12)

    def test_interaction_pairs_radicals_with_their_environment(self):
        v = v_interaction(SensorParams())
        for lab in v.terms:
            for r, e in ((0, 3), (1, 4), (2, 5)):
                if lab[r] != 'I' or lab[e] != 'I':
                    others = [c for i, c in enumerate(lab) if i not in (r, e)]
                    self.assertEqual(set(others), {'I'}, lab)

    def test_total_hamiltonian(self):
        p = SensorParams()
        a = FieldAngles(0.3, 1.1)
        free = total_hamiltonian(p, a, with_interaction=False)
        full = total_hamiltonian(p, a)
        assert_allclose((full - free).dense, v_interaction(p).dense, atol=1e-14)
        self.assertTrue(full.hermitian)


if __name__ == '__main__':
    unittest.main()
