from dataclasses import replace

from django.test import SimpleTestCase

from core.acceptance_utils import QUICK, linking_check, spectral_exponent_check

ALPHA = 5.0 / 3.0


class SpectralExponentCheckTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.result = spectral_exponent_check(replace(QUICK, spectral_kmax=32, fit_range=(4, 16)))

    def test_energy_pair_slope_is_judged(self):
        self.assertTrue(self.result.passed, self.result.measured)
        u2 = float(self.result.measured.split(',')[0].split()[1])
        self.assertAlmostEqual(u2, -2 * ALPHA + 1, delta=0.15)
        self.assertIn('U^2 -2.333 +- 0.15', self.result.expected)

    def test_unfittable_range_fails(self):
        result = spectral_exponent_check(replace(QUICK, fit_range=(4, 6)))
        self.assertFalse(result.passed)
        self.assertEqual(result.measured, 'no slope fit')


class LinkingCheckTests(SimpleTestCase):

    def test_uniform_tube_is_compared_with_measured_helicity(self):
        result = linking_check(QUICK)
        self.assertTrue(result.passed, result.measured)
        self.assertTrue(result.detail.startswith('measured chi'))
        self.assertAlmostEqual(float(result.detail.split()[2]), 3.0, delta=6e-2)
