import math
import unittest

import numpy as np
from numpy.testing import assert_allclose

from triradical.correlations import DiscordOptions
from triradical.dynamics import Propagator, build_propagators, evolve_segment, system_state
from triradical.errors import DegenerateNormalizationError, RejectedInputError
from triradical.model import FieldAngles, SensorParams, singlet_projector, total_hamiltonian
from triradical.states import (BlochVector, coherence_c1_star, environment_state, initial_system_state,
                               maximally_mixed, random_density_matrix, tensor)
from triradical.yields import (ObservableSet, ScanResult, angle_scan, anisotropy, delta_flags, grid_angles,
                               orientation_mean, segment_yield, singlet_yield, weighted_yield)

PARAMS = SensorParams()
MIXED = maximally_mixed(8)


class TestSegmentYield(unittest.TestCase):

    def test_closed_form_matches_quadrature(self):
        rng = np.random.default_rng(0)
        rho = tensor(random_density_matrix(rng, 8), random_density_matrix(rng, 8))
        prop = Propagator.from_hamiltonian(total_hamiltonian(PARAMS, FieldAngles(0.2, 0.9)))
        proj = singlet_projector().dense
        tau, n = 1.0, 2000
        ts = np.linspace(0.0, tau, n + 1)
        pops = [evolve_segment(rho, prop, t, PARAMS.k).expectation(proj) for t in ts]
        # Simpson's rule
        w = np.ones(n + 1)
        w[1:-1:2] = 4
        w[2:-1:2] = 2
        ref = PARAMS.k * tau / (3 * n) * float(np.dot(w, pops))
        self.assertAlmostEqual(segment_yield(rho, prop, proj, PARAMS.k, tau), ref, places=10)

    def test_rejects_bad_arguments(self):
        prop = Propagator.from_hamiltonian(np.eye(64))
        rho = maximally_mixed(64)
        with self.assertRaises(RejectedInputError):
            segment_yield(rho, prop, singlet_projector(), 0.0, 1.0)
        with self.assertRaises(RejectedInputError):
            segment_yield(rho, prop, singlet_projector(), PARAMS.k, 0.0)


class TestSingletYield(unittest.TestCase):

    def test_maximally_mixed_is_isotropic(self):
        y0 = singlet_yield(PARAMS, MIXED, MIXED, FieldAngles(0.0, 0.0))
        y1 = singlet_yield(PARAMS, MIXED, MIXED, FieldAngles(1.3, 2.0))
        self.assertAlmostEqual(y0, y1, delta=1e-9)
        self.assertAlmostEqual(y0, 0.25, places=6)

    def test_in_unit_interval(self):
        rho_s = initial_system_state(BlochVector(0.3, -0.2, 0.6))
        rho_e = environment_state(BlochVector(0.5, 0.0, 0.0))
        y = singlet_yield(PARAMS, rho_s, rho_e, FieldAngles(0.7, 1.1))
        self.assertGreaterEqual(y, 0.0)
        self.assertLessEqual(y, 1.0)

    def test_short_horizon(self):
        y = singlet_yield(PARAMS, MIXED, MIXED, FieldAngles(), n_periods=1)
        self.assertAlmostEqual(y, 0.25 * (1 - math.exp(-PARAMS.k * PARAMS.period)), places=12)

    def test_zeeman_only_yield_is_initial_population(self):
        # With no exchange and no collision coupling the singlet projector commutes with H
        params = SensorParams(j_abc=0.0, j_se_tau=0.0)
        rng = np.random.default_rng(11)
        rho_s = random_density_matrix(rng, 8)
        rho_e = environment_state(BlochVector(0.0, 0.0, 0.7))
        p0 = tensor(rho_s, rho_e).expectation(singlet_projector().dense)
        for angles in (FieldAngles(0.0, 0.0), FieldAngles(2.1, 1.2)):
            y = singlet_yield(params, rho_s, rho_e, angles, eps_tail=1e-10)
            self.assertAlmostEqual(y, p0, delta=1e-8)

    def test_horizon_extension_bounded_by_tail(self):
        rho_s = initial_system_state(BlochVector(0.2, 0.1, 0.7))
        angles = FieldAngles(0.4, 1.0)
        short = singlet_yield(PARAMS, rho_s, MIXED, angles, eps_tail=1e-4)
        long = singlet_yield(PARAMS, rho_s, MIXED, angles, eps_tail=1e-8)
        self.assertGreaterEqual(long, short)
        self.assertLessEqual(long - short, 1e-4)


class TestWeightedYield(unittest.TestCase):

    def setUp(self):
        self.rho_s = initial_system_state(BlochVector(0.0, 0.4, 0.4))
        self.angles = FieldAngles(0.5, 0.8)

    def test_constant_observable(self):
        wy = weighted_yield(PARAMS, self.rho_s, MIXED, self.angles, lambda rho: 1.0, n_sub=64, n_periods=40)
        assert_allclose(wy.values, [1.0], rtol=1e-12)
        exact = singlet_yield(PARAMS, self.rho_s, MIXED, self.angles, n_periods=40)
        self.assertAlmostEqual(wy.singlet, exact, places=12)
        self.assertAlmostEqual(wy.singlet_quadrature, exact, delta=1e-2 * exact)

    def test_coherence_observable(self):
        obs = ObservableSet(('c1_star', ))
        wy = weighted_yield(PARAMS, self.rho_s, MIXED, self.angles, obs, n_sub=4, n_periods=20)
        self.assertEqual(wy.values.shape, (1, ))
        self.assertGreater(wy.values[0], 0.0)

    def test_rejects_bad_subdivision(self):
        with self.assertRaises(RejectedInputError):
            weighted_yield(PARAMS, self.rho_s, MIXED, self.angles, lambda rho: 1.0, n_sub=0)

    def test_maximally_mixed_state_has_no_coherence_yield(self):
        obs = ObservableSet(('c1_star', ))
        wy = weighted_yield(PARAMS, MIXED, MIXED, self.angles, obs, n_sub=4, n_periods=40)
        self.assertAlmostEqual(wy.values[0], 0.0, delta=1e-9)

    def test_coherence_yield_converges_in_subdivision(self):
        rho_s = initial_system_state(BlochVector(0.3, 0.2, 0.6))
        obs = ObservableSet(('c1_star', ))
        coarse = weighted_yield(PARAMS, rho_s, MIXED, FieldAngles(0.3, 1.0), obs, n_sub=8)
        fine = weighted_yield(PARAMS, rho_s, MIXED, FieldAngles(0.3, 1.0), obs, n_sub=16)
        self.assertLess(abs(coarse.values[0] - fine.values[0]), 1e-4)

    def test_discord_yield_with_mixed_environment(self):
        obs = ObservableSet(('mutual', 'discord'), discord=DiscordOptions(restarts=2, max_iters=10, warm_max_iters=20))
        rho_s = initial_system_state(BlochVector(0.3, 0.2, 0.6))
        wy = weighted_yield(PARAMS, rho_s, MIXED, FieldAngles(0.3, 1.0), obs, n_sub=2, n_periods=3)
        mutual, disc = wy.values
        self.assertGreaterEqual(disc, 0.0)
        self.assertLessEqual(disc, mutual + 1e-12)
        self.assertLessEqual(disc, 0.05)


class TestNodeEvaluation(unittest.TestCase):

    def setUp(self):
        self.prop = build_propagators(PARAMS, FieldAngles(0.5, 0.8))[0]
        rho = tensor(initial_system_state(BlochVector(0.3, 0.2, 0.6)), environment_state(BlochVector(0.0, 0.0, 0.6)))
        r = self.prop.to_eigenbasis(rho.matrix)
        self.r_nodes = r[None] * self.prop.decay_factor_stack(np.linspace(0.0, 1.0, 5), PARAMS.k)

    def test_coherence_from_eigenbasis(self):
        ref = [coherence_c1_star(system_state(self.prop.from_eigenbasis(r))) for r in self.r_nodes]
        got = ObservableSet(('c1_star', )).evaluator()(self.prop, self.r_nodes)
        self.assertEqual(got.shape, (5, 1))
        assert_allclose(got[:, 0], ref, atol=1e-10)
        joint = ObservableSet(('c1_star', 'mutual')).evaluator()(self.prop, self.r_nodes)
        assert_allclose(joint[:, 0], ref, atol=1e-10)
        self.assertGreater(joint[-1, 1], 0.0)

    def test_one_full_search_per_trajectory(self):
        obs = ObservableSet(('discord', 'holevo'), discord=DiscordOptions(restarts=1, max_iters=2, warm_max_iters=2))
        evaluate = obs.evaluator()
        values = evaluate(self.prop, self.r_nodes)
        assert_allclose(values[0], [0.0, 0.0], atol=1e-9)
        self.assertEqual(evaluate.tracker.full_searches, 1)
        self.assertIsNotNone(evaluate.tracker.unitary)

    def test_empty_set(self):
        self.assertEqual(ObservableSet(()).evaluator()(self.prop, self.r_nodes).shape, (5, 0))


class TestObservableSet(unittest.TestCase):

    def test_validation(self):
        with self.assertRaises(RejectedInputError):
            ObservableSet(('entanglement', ))
        with self.assertRaises(RejectedInputError):
            ObservableSet(('mutual', 'mutual'))

    def test_product_state(self):
        obs = ObservableSet(('c1_star', 'mutual'))
        assert_allclose(obs(tensor(MIXED, MIXED)), [0.0, 0.0], atol=1e-12)


class TestScan(unittest.TestCase):

    def test_grid(self):
        thetas, phis = grid_angles(4, 3)
        assert_allclose(thetas, [0, math.pi / 2, math.pi, 3 * math.pi / 2])
        assert_allclose(phis, [0, math.pi / 2, math.pi])
        with self.assertRaises(RejectedInputError):
            grid_angles(3, 3)
        with self.assertRaises(RejectedInputError):
            grid_angles(4, 2)

    def test_trivial_state_has_no_anisotropy(self):
        scan = angle_scan(PARAMS, MIXED, MIXED, 4, 3)
        an = anisotropy(scan)
        self.assertLessEqual(an.delta, 1e-9)
        self.assertAlmostEqual(an.ra, an.delta / an.mean)

    def test_azimuthal_symmetry(self):
        rho_s = initial_system_state(BlochVector(0.0, 0.0, 0.7))
        scan = angle_scan(PARAMS, rho_s, MIXED, 4, 3)
        for row in scan.yields:
            self.assertLessEqual(row.max() - row.min(), 1e-9)
        an = anisotropy(scan)
        self.assertGreater(an.delta, 1e-6)
        self.assertAlmostEqual(an.objective, an.delta * an.mean)
        flags = delta_flags(scan)
        self.assertEqual(int((flags == 1).sum()), 1)
        self.assertEqual(int((flags == -1).sum()), 1)

    def test_serial_and_mapped_agree(self):
        rho_s = initial_system_state(BlochVector(0.1, 0.2, 0.3))
        a = angle_scan(PARAMS, rho_s, MIXED, 4, 3)
        b = angle_scan(PARAMS, rho_s, MIXED, 4, 3, map_fn=lambda f, xs: [f(x) for x in xs])
        assert_allclose(a.yields, b.yields, rtol=0, atol=0)

    def test_orientation_mean(self):
        thetas, phis = grid_angles(8, 5)
        self.assertAlmostEqual(orientation_mean(np.full((5, 8), 0.3), phis), 0.3)

    def test_degenerate_mean(self):
        thetas, phis = grid_angles(4, 3)
        with self.assertRaises(DegenerateNormalizationError):
            anisotropy(ScanResult(thetas, phis, np.zeros((3, 4))))


if __name__ == '__main__':
    unittest.main()
