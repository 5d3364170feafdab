import numpy as np
from django.test import SimpleTestCase

from core.exceptions import RejectedInputError, SupportError
from core.field_constructors import (
    TubeSpec, abc_field, circular_wave, cross_section_flux, hopf_pair, random_powerlaw,
    seeded_generator, tube_field, tube_pair, twisted_tube,
)
from core.spectral_utils import SpectralEvaluator


class SpectralConstructorTests(SimpleTestCase):

    def test_abc_has_six_populated_modes(self):
        field = abc_field(1.0, 1.0, 1.0)
        self.assertEqual(field.full_mode_count, 6)
        self.assertEqual(abc_field(1.0, 0.0, 0.0).full_mode_count, 2)

    def test_abc_needs_a_nonzero_amplitude(self):
        with self.assertRaises(RejectedInputError):
            abc_field(0, 0, 0)

    def test_wave_needs_positive_integer_k(self):
        for k in (0, -1, 1.5):
            with self.assertRaises(RejectedInputError):
                circular_wave(1.0, k)

    def test_powerlaw_is_seed_deterministic(self):
        first = random_powerlaw(5.0 / 3.0, 1.0, 0.5, 6, seed=7)
        second = random_powerlaw(5.0 / 3.0, 1.0, 0.5, 6, seed=7)
        other = random_powerlaw(5.0 / 3.0, 1.0, 0.5, 6, seed=8)
        np.testing.assert_array_equal(first.wavevectors, second.wavevectors)
        np.testing.assert_array_equal(first.cplus, second.cplus)
        np.testing.assert_array_equal(first.cminus, second.cminus)
        self.assertFalse(np.array_equal(first.cplus, other.cplus))

    def test_powerlaw_magnitudes(self):
        field = random_powerlaw(2.0, 1.5, 0.25, 5, seed=1)
        np.testing.assert_allclose(np.abs(field.cplus), 1.5 * field.kmag ** -2.0, rtol=1e-12)
        np.testing.assert_allclose(np.abs(field.cminus), 0.25 * field.kmag ** -2.0, rtol=1e-12)
        self.assertLessEqual(field.kmag.max(), 5.0)

    def test_powerlaw_parameter_checks(self):
        with self.assertRaises(RejectedInputError):
            random_powerlaw(5.0 / 3.0, 1.0, 0.0, 3, seed=0)
        with self.assertRaises(RejectedInputError):
            random_powerlaw(1.0, 1.0, 0.0, 8, seed=0)


class TubeTests(SimpleTestCase):

    def test_spec_validation(self):
        with self.assertRaises(RejectedInputError):
            TubeSpec(R=1.0, a=1.0, kappa=0, phi=1.0)
        with self.assertRaises(RejectedInputError):
            TubeSpec(R=1.0, a=0.2, kappa=0.5, phi=1.0)
        with self.assertRaises(RejectedInputError):
            TubeSpec(R=1.0, a=0.2, kappa=0, phi=1.0, profile='gaussian')

    def test_axial_flux_equals_phi(self):
        for profile in ('bump', 'flat'):
            spec = TubeSpec(R=1.0, a=0.3, kappa=2, phi=0.7, profile=profile)
            self.assertAlmostEqual(cross_section_flux(tube_field(spec), spec), 0.7, places=4)

    def test_potential_curl_is_the_field(self):
        spec = TubeSpec(R=1.0, a=0.4, kappa=3, phi=1.0)
        tube = tube_field(spec)
        x = tube.seed_point(0.5 * spec.a, theta=0.7, phi=1.1)
        h = 1e-5
        grad = np.stack([(tube.potential(x + h * e) - tube.potential(x - h * e)) / (2 * h)
                         for e in np.eye(3)], axis=1)
        curl_a = np.array([grad[2, 1] - grad[1, 2], grad[0, 2] - grad[2, 0], grad[1, 0] - grad[0, 1]])
        np.testing.assert_allclose(curl_a, tube.evaluate(x), rtol=1e-6, atol=1e-8)

    def test_field_vanishes_outside_the_tube(self):
        spec = TubeSpec(R=1.0, a=0.2, kappa=1, phi=1.0)
        tube = tube_field(spec)
        np.testing.assert_allclose(tube.evaluate(tube.seed_point(0.3)), 0.0)

    def test_samples_lie_in_the_solid_torus(self):
        spec = TubeSpec(R=1.0, a=0.2, kappa=1, phi=1.0)
        tube = tube_field(spec)
        points = tube.sample(500, seeded_generator(3))
        self.assertEqual(points.shape, (500, 3))
        self.assertTrue(np.all(tube.distance_to_axis(points) < spec.a))

    def test_support_must_fit_in_the_box(self):
        with self.assertRaises(SupportError):
            tube_field(TubeSpec(R=3.0, a=0.5, kappa=0, phi=1.0))

    def test_hopf_pair_overlap_is_rejected(self):
        with self.assertRaises(SupportError):
            tube_pair(*hopf_pair(1.0, 0.6, 1.0, 1.0))
        pair = tube_pair(*hopf_pair(1.0, 0.2, 1.0, 2.0))
        self.assertAlmostEqual(pair.volume, sum(t.spec.volume for t in pair.tubes))

    def test_pair_rejects_twisted_tubes(self):
        spec1, spec2 = hopf_pair(1.0, 0.2, 1.0, 1.0)
        twisted = TubeSpec(R=spec1.R, a=spec1.a, kappa=1, phi=1.0, center=spec1.center)
        with self.assertRaises(RejectedInputError):
            tube_pair(twisted, spec2)

    def test_twisted_tube_grid_reports_divergence(self):
        grid = twisted_tube(TubeSpec(R=1.0, a=0.3, kappa=2, phi=1.0), 24)
        self.assertEqual(grid.N, 24)
        for key in ('divergence_max', 'divergence_relative', 'a_over_R', 'divergence_constant'):
            self.assertIn(key, grid.diagnostics)
        self.assertIsNotNone(grid.support)


class WaveEvaluationTests(SimpleTestCase):

    def test_wave_rotates_with_height(self):
        evaluator = SpectralEvaluator(circular_wave(1.0, 1))
        low = evaluator.evaluate(np.array([0.0, 0.0, 0.0]))
        high = evaluator.evaluate(np.array([0.0, 0.0, np.pi / 2]))
        self.assertAlmostEqual(float(np.dot(low, high)), 0.0, places=12)
        self.assertAlmostEqual(low[2], 0.0, places=12)
