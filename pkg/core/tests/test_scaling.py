import numpy as np
from django.test import SimpleTestCase

from core.exceptions import RejectedInputError
from core.field_constructors import abc_field, circular_wave, random_powerlaw
from core.invariant_utils import delta2
from core.scaling_utils import (
    DEFAULT_FIT_RANGE, arnold_check, fit_slope, lattice_counts, product_spectrum, shell_spectrum,
)
from core.spectral_utils import energy, field_and_potential_grids, grid_quadrature, helicity

ALPHA = 5.0 / 3.0


class ShellSpectrumTests(SimpleTestCase):

    def setUp(self):
        self.field = random_powerlaw(ALPHA, 1.0, 0.5, 4, seed=6)

    def test_quadratic_spectra_sum_to_invariants(self):
        self.assertAlmostEqual(shell_spectrum(self.field, 'energy').total / energy(self.field), 1.0, places=12)
        self.assertAlmostEqual(shell_spectrum(self.field, 'helicity').total / helicity(self.field), 1.0,
                               places=12)

    def test_pair_spectra_sum_to_squares(self):
        self.assertAlmostEqual(product_spectrum(self.field, 'helicity_sq').total / helicity(self.field) ** 2,
                               1.0, places=10)
        self.assertAlmostEqual(product_spectrum(self.field, 'energy_pair').total / energy(self.field) ** 2,
                               1.0, places=10)

    def test_pseudo_spectral_products_obey_parseval(self):
        B, _ = field_and_potential_grids(self.field, 18)
        quartic = grid_quadrature(np.sum(B * B, axis=0) ** 2)
        self.assertAlmostEqual(product_spectrum(self.field, 'energy_sq').total / quartic, 1.0, places=8)
        self.assertAlmostEqual(product_spectrum(self.field, 'delta2').total / delta2(self.field).value, 1.0,
                               places=8)

    def test_coarse_product_grid_is_flagged(self):
        spectrum = product_spectrum(self.field, 'delta2', N=10)
        self.assertTrue(any('aliased' in notice for notice in spectrum.notices))

    def test_unknown_quantity(self):
        with self.assertRaises(RejectedInputError):
            shell_spectrum(self.field, 'enstrophy')
        with self.assertRaises(RejectedInputError):
            product_spectrum(self.field, 'helicity_cubed')

    def test_lattice_counts(self):
        counts = lattice_counts(2)
        self.assertEqual(counts[0], 0)
        # |k| = 1 and sqrt(2); sqrt(3) rounds up
        self.assertEqual(counts[1], 6 + 12)


class SlopeTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.field = random_powerlaw(ALPHA, 1.0, 0.0, 32, seed=7)

    def test_energy_density_slope(self):
        fit = fit_slope(shell_spectrum(self.field, 'energy'), 4, 16)
        self.assertAlmostEqual(fit.slope, -2 * ALPHA, delta=0.1)
        self.assertEqual((fit.kmin, fit.kmax), (4, 16))

    def test_helicity_squared_slope(self):
        fit = fit_slope(product_spectrum(self.field, 'helicity_sq'), 4, 16)
        self.assertAlmostEqual(fit.slope, -2 * ALPHA - 1, delta=0.2)

    def test_energy_pair_slope(self):
        spectrum = product_spectrum(self.field, 'energy_pair', fit_range=(4, 16))
        self.assertAlmostEqual(spectrum.slope, -2 * ALPHA + 1, delta=0.15)

    def test_spectra_carry_their_fit(self):
        spectrum = shell_spectrum(self.field, 'energy', fit_range=(4, 16))
        fit = fit_slope(spectrum, 4, 16)
        self.assertEqual(spectrum.slope, fit.slope)
        self.assertEqual(spectrum.slope_stderr, fit.stderr)
        self.assertEqual(spectrum.fit_range, (4, 16))
        default = shell_spectrum(self.field, 'energy')
        self.assertEqual(default.fit_range[0], DEFAULT_FIT_RANGE[0])

    def test_unfittable_spectrum_gets_a_notice(self):
        spectrum = shell_spectrum(abc_field(1.0, 1.0, 1.0), 'energy')
        self.assertIsNone(spectrum.slope)
        self.assertTrue(any(notice.startswith('no slope fit') for notice in spectrum.notices))

    def test_too_few_shells(self):
        with self.assertRaises(RejectedInputError):
            fit_slope(shell_spectrum(self.field, 'energy'), 4, 6)


class ArnoldTests(SimpleTestCase):

    def test_unit_beltrami_fields_are_extremal(self):
        for field in (abc_field(1.0, 1.0, 1.0), circular_wave(1.0, 1)):
            result = arnold_check(field)
            self.assertTrue(result.satisfied)
            self.assertTrue(result.equality)
            self.assertAlmostEqual(result.C_effective, 1.0, places=12)

    def test_mixed_field_is_strict(self):
        result = arnold_check(random_powerlaw(ALPHA, 1.0, 0.5, 6, seed=1))
        self.assertTrue(result.satisfied)
        self.assertFalse(result.equality)
        self.assertGreater(result.C_effective, 1.0)
