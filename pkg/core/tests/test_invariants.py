import numpy as np
from django.test import SimpleTestCase

from core.exceptions import RejectedInputError
from core.field_constructors import (
    TubeSpec, abc_field, circular_wave, hopf_pair, random_powerlaw, seeded_generator, tube_field,
    tube_pair, twisted_tube,
)
from core.fieldline_utils import lambda_A, trace_closed_line, trace_lines
from core.invariant_utils import (
    Estimate, InvariantReport, assemble_report, basic_invariants, check_inequalities,
    chi2_estimate, chi_bracket2_estimate, delta2, delta_bracket2, dispersion_along_lines,
    dispersion_of_line_means, domain_volume, exact, pair_linking_table, sample_domain,
)
from core.spectral_utils import (
    VOLUME, SpectralField, biot_savart_potential, grid_quadrature, mirror, rotate, synthesize,
)

SHORT_LADDER = (5.0, 10.0, 20.0)


class ExactInvariantTests(SimpleTestCase):

    def test_wave_invariants(self):
        U, chi, chiC = basic_invariants(circular_wave(1.0, 1))
        self.assertAlmostEqual(U.value / VOLUME, 1.0, places=12)
        self.assertAlmostEqual(chi.value, U.value, places=9)
        self.assertAlmostEqual(chiC.value, U.value, places=9)
        self.assertAlmostEqual(delta2(circular_wave(1.0, 1)).value / VOLUME, 1.0, places=9)

    def test_zero_field_gives_zero_report_entries(self):
        U, chi, chiC = basic_invariants(SpectralField.zeros())
        self.assertEqual((U.value, chi.value, chiC.value), (0.0, 0.0, 0.0))
        self.assertEqual(delta2(SpectralField.zeros()).value, 0.0)

    def test_grid_and_spectral_quadratures_agree(self):
        field = random_powerlaw(2.0, 1.0, 0.4, 4, seed=9)
        spectral = delta2(field).value
        gridded = delta2(synthesize(field, 24))
        self.assertAlmostEqual(gridded.value / spectral, 1.0, places=6)
        self.assertNotIn('unresolved', gridded.flags)

    def test_bracket_needs_compact_support(self):
        with self.assertRaises(RejectedInputError):
            delta_bracket2(abc_field(1, 1, 1))


class LineEstimatorTests(SimpleTestCase):

    def test_wave_chi2_equals_chi_squared_over_volume(self):
        field = circular_wave(1.0, 1)
        estimate = chi2_estimate(field, n_seeds=16, t_ladder=SHORT_LADDER)
        self.assertAlmostEqual(estimate.value / VOLUME, 1.0, places=6)
        self.assertEqual(estimate.flags, ())
        self.assertEqual(len(estimate.ladder), 3)

    def test_too_few_seeds_rejected(self):
        with self.assertRaises(RejectedInputError):
            chi2_estimate(circular_wave(1.0, 1), n_seeds=8)

    def test_uniform_twist_tube(self):
        spec = TubeSpec(R=1.0, a=0.25, kappa=2, phi=1.0, profile='flat')
        tube = tube_field(spec)
        period = 2 * np.pi * spec.R * np.pi * spec.a ** 2 / spec.phi
        estimate = chi2_estimate(tube, n_seeds=16, t_ladder=(2 * period,), closed=True)
        self.assertAlmostEqual(estimate.value * spec.volume / spec.helicity ** 2, 1.0, places=4)
        self.assertAlmostEqual(domain_volume(tube), spec.volume)

    def test_hopf_axes_link_once(self):
        pair = tube_pair(*hopf_pair(1.0, 0.2, 1.0, 1.0))
        axes = []
        for tube in pair.tubes:
            speed = float(np.linalg.norm(tube.evaluate(tube.seed_point(0.0))))
            axes.append(trace_closed_line(pair, tube.seed_point(0.0), 4 * np.pi / speed))
        table = pair_linking_table(axes[:1], axes[1:])
        self.assertAlmostEqual(table[0, 0], 1.0, delta=1e-3)


class InequalityTests(SimpleTestCase):

    def test_wave_chain_is_all_equalities(self):
        report = assemble_report(circular_wave(1.0, 1), n_seeds=16, t_ladder=SHORT_LADDER)
        self.assertEqual(report.failed, [])
        for verdict in report.verdicts:
            self.assertAlmostEqual(verdict.lhs / verdict.rhs, 1.0, places=6)

    def test_powerlaw_chain_holds(self):
        report = assemble_report(random_powerlaw(5.0 / 3.0, 1.0, 0.5, 4, seed=3), n_seeds=16,
                                 t_ladder=SHORT_LADDER)
        self.assertEqual([v.name for v in report.failed], [])
        self.assertLessEqual(report.chi2.value, report.delta2.value + 2 * report.chi2.sigma)

    def test_violation_is_reported(self):
        report = InvariantReport(volume=1.0, U=exact(1.0), chi=exact(2.0),
                                 chi2=Estimate(1.0, stderr=0.01), delta2=exact(3.0))
        verdicts = {v.name: v for v in check_inequalities(report)}
        self.assertEqual(verdicts['chi^2 <= Vol chi2'].status, 'fail')
        self.assertEqual(verdicts['chi2 <= delta2'].status, 'pass')


class DispersionTests(SimpleTestCase):

    def test_wave_has_no_dispersion(self):
        field = circular_wave(1.0, 1)
        seeds = sample_domain(field, 16, np.random.Generator(np.random.Philox(0)))
        lines = trace_lines(field, seeds, 10.0)
        self.assertAlmostEqual(dispersion_along_lines(field, lines).value, 0.0, places=6)
        self.assertAlmostEqual(dispersion_of_line_means(field, lines).value, 0.0, places=6)

    def test_identities_on_a_short_abc_run(self):
        field = abc_field(1.0, 1.0, 1.0)
        seeds = sample_domain(field, 16, np.random.Generator(np.random.Philox(1)))
        lines = trace_lines(field, seeds, 20.0)
        chi2 = chi2_estimate(field, n_seeds=16, t_ladder=(20.0,), lines=lines)
        along = dispersion_along_lines(field, lines)
        across = dispersion_of_line_means(field, lines)
        self.assertGreaterEqual(along.value, 0.0)
        # the across-lines identity holds sample by sample up to the ddof convention
        means = np.array([line.integrals(20.0)[0] / 20.0 for line in lines])
        self.assertAlmostEqual(chi2.value - VOLUME * means.mean() ** 2,
                               across.value * 15 / 16, delta=1e-8 * chi2.value)


class TubeInvariantTests(SimpleTestCase):

    def test_twisted_tube_helicity_is_kappa_phi_squared(self):
        spec = TubeSpec(R=1.0, a=0.3, kappa=3, phi=1.0)
        _, chi, _ = basic_invariants(tube_field(spec))
        self.assertAlmostEqual(chi.value, spec.helicity, delta=4 * chi.stderr + 1e-2 * spec.helicity)

    def test_untwisted_tube_has_no_helicity(self):
        _, chi, _ = basic_invariants(tube_field(TubeSpec(R=1.0, a=0.3, kappa=0, phi=1.0)))
        self.assertAlmostEqual(chi.value, 0.0, places=12)

    def test_linked_tubes_carry_twice_the_flux_product(self):
        spec1, spec2 = hopf_pair(1.0, 0.2, 1.0, 2.0, profile='flat')
        _, chi, _ = basic_invariants(tube_pair(spec1, spec2))
        self.assertAlmostEqual(chi.value, 2 * spec1.phi * spec2.phi,
                               delta=4 * chi.stderr + 1e-2 * spec1.phi * spec2.phi)

    def test_energy_of_disjoint_tubes_adds(self):
        spec1, spec2 = hopf_pair(1.0, 0.2, 1.0, 2.0, profile='flat')
        # flat untwisted tube: |B| = Phi / (pi a^2) over the volume 2 pi^2 a^2 R
        separate = sum(2 * spec.phi ** 2 * spec.R / spec.a ** 2 for spec in (spec1, spec2))
        U, _, _ = basic_invariants(tube_pair(spec1, spec2))
        self.assertAlmostEqual(U.value / separate, 1.0, delta=1e-2)


class PairEstimatorTests(SimpleTestCase):

    def test_chi_bracket2_counts_linked_pairs(self):
        spec1, spec2 = hopf_pair(1.0, 0.2, 1.0, 1.0, profile='flat')
        pair = tube_pair(spec1, spec2)
        estimate = chi_bracket2_estimate(pair, n_pairs=16, T=2.0, seed=3, closed=True)
        # lines in different tubes link once, lines in the same tube are coaxial circles
        seeds = sample_domain(pair, 32, seeded_generator(3))
        first = pair.tubes[0].distance_to_axis(seeds) < spec1.a
        linked = (first[0::2] != first[1::2]).astype(float)
        vol2 = domain_volume(pair) ** 2
        self.assertAlmostEqual(estimate.value / vol2, float(np.mean(linked)), delta=1e-2)
        self.assertEqual(estimate.samples, 16)

    def test_chi_bracket2_needs_compact_support(self):
        with self.assertRaises(RejectedInputError):
            chi_bracket2_estimate(abc_field(1, 1, 1))

    def test_delta_bracket2_cutoff_ladder(self):
        tube = tube_field(TubeSpec(R=1.0, a=0.3, kappa=2, phi=1.0))
        estimate = delta_bracket2(tube, n_pairs=20_000, seed=1)
        at_h, at_2h = estimate.ladder
        self.assertEqual(estimate.value, at_h)
        self.assertEqual(estimate.parameters['cutoff'], 0.02)
        self.assertGreaterEqual(at_h, at_2h)
        self.assertAlmostEqual(estimate.systematic, at_h - at_2h)
        wider = delta_bracket2(tube, n_pairs=20_000, cutoff=0.1, seed=1)
        self.assertEqual(wider.parameters['cutoff'], 0.1)
        self.assertLessEqual(wider.value, estimate.value)


class SymmetryTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.field = random_powerlaw(5.0 / 3.0, 1.0, 0.5, 4, seed=3)
        cls.seeds = seeded_generator(2).random((16, 3)) * 2 * np.pi
        cls.lines = trace_lines(cls.field, cls.seeds, 10.0)
        cls.chi2 = chi2_estimate(cls.field, n_seeds=16, t_ladder=(10.0,), lines=cls.lines)

    def test_mirror_image_flips_line_helicity(self):
        image = mirror(self.field)
        lines = trace_lines(image, -self.seeds, 10.0)
        for original, mirrored in zip(self.lines, lines):
            self.assertAlmostEqual(lambda_A(mirrored), -lambda_A(original), delta=1e-6)
        chi2 = chi2_estimate(image, n_seeds=16, t_ladder=(10.0,), lines=lines)
        self.assertAlmostEqual(chi2.value / self.chi2.value, 1.0, delta=1e-6)
        self.assertAlmostEqual(delta2(image).value / delta2(self.field).value, 1.0, places=9)

    def test_rotation_preserves_line_helicity(self):
        cyclic = np.array([[0, 0, 1], [1, 0, 0], [0, 1, 0]])
        image = rotate(self.field, cyclic)
        lines = trace_lines(image, self.seeds @ cyclic.T, 10.0)
        for original, rotated in zip(self.lines, lines):
            self.assertAlmostEqual(lambda_A(rotated), lambda_A(original), delta=1e-6)
        chi2 = chi2_estimate(image, n_seeds=16, t_ladder=(10.0,), lines=lines)
        self.assertAlmostEqual(chi2.value / self.chi2.value, 1.0, delta=1e-6)
        self.assertAlmostEqual(delta2(image).value / delta2(self.field).value, 1.0, places=9)


class FreeSpaceDelta2Tests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.twisted_spec = TubeSpec(R=1.0, a=0.5, kappa=2, phi=1.0)
        cls.twisted = twisted_tube(cls.twisted_spec, 64)
        cls.untwisted = twisted_tube(TubeSpec(R=1.0, a=0.5, kappa=0, phi=1.0), 64)
        cls.estimate = delta2(cls.twisted)

    def test_refines_to_twice_the_grid(self):
        estimate = self.estimate
        self.assertEqual(estimate.parameters, {'N': 64, 'M': 128, 'gauge': 'biot_savart'})

    def test_unrefined_value_uses_the_free_space_potential(self):
        density = np.sum(biot_savart_potential(self.twisted) * self.twisted.data, axis=0)
        coarse = grid_quadrature(density ** 2)
        estimate = self.estimate
        self.assertAlmostEqual(estimate.systematic, abs(estimate.value - coarse),
                               delta=1e-9 * estimate.value)

    def test_analytic_tube_is_sampled_like_the_grid(self):
        analytic = delta2(tube_field(self.twisted_spec), N=64)
        self.assertAlmostEqual(analytic.value / self.estimate.value, 1.0, places=9)

    def test_untwisted_tube_is_near_zero_without_a_warning(self):
        flat = delta2(self.untwisted)
        self.assertLess(flat.value, 1e-2 * self.estimate.value)
        self.assertNotIn('unresolved', flat.flags)
