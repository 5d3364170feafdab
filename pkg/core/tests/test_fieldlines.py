import numpy as np
from django.test import SimpleTestCase

from core.exceptions import RejectedInputError
from core.field_constructors import TubeSpec, abc_field, circular_wave, tube_field
from core.fieldline_utils import (
    endpoint_correction, flow_volume_ratio, gauss_linking, lambda_A, polyline_gauss_integral,
    stokes_gauge_check, trace_closed_line, trace_line, trace_lines, windowed_variance,
)


def circle(center, e1, e2, n=512):
    t = np.linspace(0.0, 2.0 * np.pi, n + 1)
    return np.asarray(center) + np.cos(t)[:, None] * np.asarray(e1) + np.sin(t)[:, None] * np.asarray(e2)


class GaussIntegralTests(SimpleTestCase):

    def test_hopf_circles_link_once(self):
        first = circle((0, 0, 0), (1, 0, 0), (0, 1, 0))
        second = circle((1, 0, 0), (1, 0, 0), (0, 0, -1))
        self.assertAlmostEqual(polyline_gauss_integral(first, second), 1.0, delta=1e-3)
        self.assertAlmostEqual(polyline_gauss_integral(first, second[::-1]), -1.0, delta=1e-3)

    def test_separated_circles_do_not_link(self):
        first = circle((0, 0, 0), (1, 0, 0), (0, 1, 0))
        second = circle((3, 0, 0), (1, 0, 0), (0, 0, 1))
        self.assertAlmostEqual(polyline_gauss_integral(first, second), 0.0, delta=1e-3)


class TracingTests(SimpleTestCase):

    def test_wave_lines_carry_constant_helicity_density(self):
        line = trace_line(circular_wave(1.0, 1), np.array([0.1, 0.2, 0.3]), 20.0)
        self.assertTrue(line.is_complete)
        self.assertAlmostEqual(lambda_A(line), 1.0, places=8)
        self.assertLess(windowed_variance(line, 10.0), 1e-12)
        np.testing.assert_allclose(line.position_at(0.0), [0.1, 0.2, 0.3])

    def test_batches_do_not_depend_on_threads(self):
        field = abc_field(1.0, 1.0, 1.0)
        seeds = np.random.Generator(np.random.Philox(4)).random((20, 3)) * 2 * np.pi
        serial = trace_lines(field, seeds, 5.0, batch_size=8, threads=1)
        threaded = trace_lines(field, seeds, 5.0, batch_size=8, threads=3)
        for a, b in zip(serial, threaded):
            np.testing.assert_array_equal(a.position_at(5.0), b.position_at(5.0))

    def test_batched_lines_agree_with_single_lines(self):
        field = abc_field(1.0, 1.0, 1.0)
        seeds = np.array([[0.5, 1.0, 1.5], [2.0, 0.3, 4.0]])
        batch = trace_lines(field, seeds, 5.0)
        for seed, line in zip(seeds, batch):
            single = trace_line(field, seed, 5.0)
            np.testing.assert_allclose(line.position_at(5.0), single.position_at(5.0), atol=1e-6)
            self.assertAlmostEqual(lambda_A(line), lambda_A(single), places=6)

    def test_non_positive_time_is_rejected(self):
        with self.assertRaises(RejectedInputError):
            trace_line(abc_field(1, 1, 1), np.zeros(3), 0.0)

    def test_flow_preserves_volume(self):
        ratio = flow_volume_ratio(abc_field(1.0, 1.0, 1.0), np.array([1.0, 2.0, 3.0]), 1.0,
                                  n_points=200)
        self.assertAlmostEqual(ratio, 1.0, delta=1e-2)


class ClosedLineTests(SimpleTestCase):

    def setUp(self):
        self.spec = TubeSpec(R=1.0, a=0.25, kappa=3, phi=1.0, profile='flat')
        self.tube = tube_field(self.spec)
        self.g0 = self.spec.phi / (np.pi * self.spec.a ** 2)
        self.period = 2 * np.pi * self.spec.R / self.g0

    def test_lines_close_after_one_turn(self):
        line = trace_closed_line(self.tube, self.tube.seed_point(0.1, theta=0.4), 2 * self.period)
        self.assertAlmostEqual(line.T / self.period, 1.0, places=6)
        self.assertLess(line.closure_gap, 1e-4)
        expected = self.spec.kappa * self.spec.phi * self.g0 / (2 * np.pi * self.spec.R)
        self.assertAlmostEqual(lambda_A(line) / expected, 1.0, places=6)

    def test_lines_of_twisted_tube_link_kappa_times(self):
        inner = trace_closed_line(self.tube, self.tube.seed_point(0.0), 2 * self.period)
        outer = trace_closed_line(self.tube, self.tube.seed_point(0.12, theta=0.3), 2 * self.period)
        self.assertAlmostEqual(gauss_linking(inner, outer), 3.0, delta=1e-2)

    def test_coincident_seeds_are_rejected(self):
        line = trace_closed_line(self.tube, self.tube.seed_point(0.1), 2 * self.period)
        with self.assertRaises(RejectedInputError):
            gauss_linking(line, line)


class GaugeTests(SimpleTestCase):

    def setUp(self):
        self.field = abc_field(1.0, 1.0, 1.0)
        self.line = trace_line(self.field, np.array([0.7, 1.9, 2.6]), 8.0)

    def test_closed_perturbation_matches_strip_flux(self):
        check = stokes_gauge_check(self.field, self.line, 1e-2)
        self.assertAlmostEqual(check.difference, check.flux, delta=1e-3 * abs(check.flux) + 1e-12)

    def test_closed_perturbation_is_second_order(self):
        coarse = stokes_gauge_check(self.field, self.line, 1e-2)
        fine = stokes_gauge_check(self.field, self.line, 5e-3)
        ratio = coarse.difference / fine.difference
        self.assertGreater(ratio, 3.2)
        self.assertLess(ratio, 4.8)

    def test_open_perturbation_shifts_by_endpoint_term(self):
        check = endpoint_correction(self.field, self.line, np.array([1e-4, -2e-4, 5e-5]))
        self.assertAlmostEqual(check.difference / check.predicted, 1.0, delta=5e-2)


class FiniteTimeBlowUp:
    """B = (1/(1 - x), 0, 0): the line through x < 1 reaches x = 1 at tau = (1 - x)^2 / 2"""

    def evaluate(self, points):
        pts = np.atleast_2d(points)
        with np.errstate(divide='ignore', invalid='ignore'):
            bx = np.where(pts[:, 0] < 1.0, 1.0 / (1.0 - pts[:, 0]), np.nan)
        values = np.column_stack([bx, np.zeros(len(pts)), np.zeros(len(pts))])
        return values[0] if np.ndim(points) == 1 else values

    def potential(self, points):
        return np.zeros_like(np.asarray(points, dtype=float))

    def field_and_potential(self, points):
        return self.evaluate(points), self.potential(points)


class PartialLineTests(SimpleTestCase):

    def test_stiff_seed_returns_a_partial_line(self):
        seeds = np.array([[0.5, 0.0, 0.0], [-100.0, 0.0, 0.0]])
        with self.assertLogs('core.fieldline_utils', level='WARNING'):
            stiff, regular = trace_lines(FiniteTimeBlowUp(), seeds, 1.0)
        self.assertEqual(stiff.status, 'partial')
        self.assertNotEqual(stiff.message, '')
        self.assertLessEqual(stiff.T, 0.125)
        self.assertTrue(regular.is_complete)
        self.assertEqual(regular.T, 1.0)
        self.assertAlmostEqual(regular.position_at(1.0)[0], 1.0 - np.sqrt(101.0 ** 2 - 2.0), places=6)

    def test_single_stiff_line_is_partial(self):
        line = trace_line(FiniteTimeBlowUp(), np.array([0.5, 0.0, 0.0]), 1.0)
        self.assertFalse(line.is_complete)
        self.assertLess(line.T, 1.0)
