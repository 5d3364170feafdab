import numpy as np
from django.test import SimpleTestCase

from core.exceptions import CFLError, RejectedInputError
from core.field_constructors import abc_field, random_powerlaw
from core.induction_utils import (
    EvolutionParams, InductionSolver, beltrami_closed_form, chi2_closed_form, evolve, evolve_series,
    helicity_balance, step_induction, theorem2_rhs,
)
from core.invariant_utils import delta2
from core.spectral_utils import SpectralField, energy, helicity, mirror


class ParameterTests(SimpleTestCase):

    def test_invalid_parameters(self):
        with self.assertRaises(RejectedInputError):
            EvolutionParams(eta=-0.1)
        with self.assertRaises(RejectedInputError):
            EvolutionParams(dt=0.0)
        compressive = SpectralField([(0, 0, 1)], [1.0], [0.0], compressive_norm=0.5)
        with self.assertRaises(RejectedInputError):
            EvolutionParams(velocity=compressive)

    def test_cfl_violation(self):
        params = EvolutionParams(dt=1.0, t_end=1.0, velocity=abc_field(10.0, 10.0, 10.0))
        solver = InductionSolver(abc_field(1.0, 1.0, 1.0), params)
        with self.assertRaises(CFLError):
            solver.step()


class ClosedFormTests(SimpleTestCase):

    def test_beltrami_amplitudes_follow_exponential(self):
        field = abc_field(1.0, 1.0, 1.0)
        params = EvolutionParams(alpha=0.1, eta=0.05, dt=0.05, t_end=1.0)
        evolved = evolve(field, params)
        exact = beltrami_closed_form(field, params, 1.0)
        for k, cp in zip(exact.wavevectors, exact.cplus):
            got, _ = evolved.amplitudes(k)
            self.assertLess(abs(got - cp), 1e-10 * abs(cp))
        self.assertAlmostEqual(energy(evolved) / energy(field), np.exp(2 * 0.05), places=10)

    def test_chi2_growth_law(self):
        field = abc_field(1.0, 1.0, 1.0)
        params = EvolutionParams(alpha=0.1, eta=0.05)
        self.assertAlmostEqual(chi2_closed_form(field, 2.0, params, 1.0), 2.0 * np.exp(0.2), places=12)

    def test_chi2_growth_law_needs_beltrami_field(self):
        with self.assertRaises(RejectedInputError):
            chi2_closed_form(random_powerlaw(5.0 / 3.0, 1.0, 0.5, 4, seed=0), 1.0, EvolutionParams(), 1.0)

    def test_closed_form_refuses_velocity(self):
        params = EvolutionParams(velocity=abc_field(0.1, 0.1, 0.1))
        with self.assertRaises(RejectedInputError):
            beltrami_closed_form(abc_field(1, 1, 1), params, 1.0)


class BalanceTests(SimpleTestCase):

    def test_helicity_balance_is_second_order(self):
        field = random_powerlaw(5.0 / 3.0, 1.0, 0.5, 4, seed=1)
        residuals = []
        for dt in (0.02, 0.01):
            predicted, measured = helicity_balance(field, EvolutionParams(alpha=0.1, eta=0.05, dt=dt))
            residuals.append(abs(measured - predicted))
        ratio = residuals[0] / residuals[1]
        self.assertGreater(ratio, 3.2)
        self.assertLess(ratio, 4.8)

    def test_ideal_advection_conserves_helicity(self):
        field = random_powerlaw(5.0 / 3.0, 1.0, 0.5, 4, seed=2)
        params = EvolutionParams(dt=0.01, t_end=0.1, velocity=abc_field(0.5, 0.5, 0.5))
        evolved = evolve(field, params)
        self.assertAlmostEqual(helicity(evolved) / helicity(field), 1.0, places=6)
        self.assertNotAlmostEqual(energy(evolved) / energy(field), 1.0, places=6)


class SeriesTests(SimpleTestCase):

    def test_series_rows(self):
        params = EvolutionParams(alpha=0.0, eta=0.01, dt=0.1, t_end=0.5)
        rows, snapshots = evolve_series(abc_field(1.0, 1.0, 1.0), params, snapshot_every=0.1)
        self.assertEqual(len(rows), 6)
        self.assertEqual(len(snapshots), 6)
        self.assertEqual(set(rows[0]), {'t', 'U', 'chi', 'chiC', 'delta2', 'theorem2_rhs'})
        self.assertAlmostEqual(rows[-1]['t'], 0.5, places=12)
        self.assertLess(rows[-1]['U'], rows[0]['U'])

    def test_rate_bound_covers_beltrami_growth(self):
        field = abc_field(1.0, 1.0, 1.0)
        params = EvolutionParams(alpha=0.1, eta=0.05)
        # d sqrt(chi2)/dt = 2 (alpha - eta) sqrt(chi2) and chi2 <= delta2
        rate = 2 * (params.alpha - params.eta) * np.sqrt(delta2(field).value)
        self.assertLessEqual(rate, theorem2_rhs(field, params))

    def test_rate_bound_vanishes_without_sources(self):
        self.assertEqual(theorem2_rhs(abc_field(1, 1, 1), EvolutionParams()), 0.0)


class StepTests(SimpleTestCase):

    def test_single_step_follows_closed_form(self):
        field = abc_field(1.0, 1.0, 1.0)
        params = EvolutionParams(alpha=0.1, eta=0.05, dt=0.05)
        stepped = step_induction(field, params)
        exact = beltrami_closed_form(field, params, 0.05)
        for k, cp in zip(exact.wavevectors, exact.cplus):
            got, _ = stepped.amplitudes(k)
            self.assertLess(abs(got - cp), 1e-12 * abs(cp))

    def test_stepping_matches_a_continuous_run(self):
        field = random_powerlaw(5.0 / 3.0, 1.0, 0.5, 3, seed=4)
        params = EvolutionParams(alpha=0.1, eta=0.02, dt=0.01, t_end=0.05,
                                 velocity=abc_field(0.5, 0.5, 0.5))
        solver = InductionSolver(field, params)
        for _ in range(5):
            solver.step()
        continuous = solver.field()
        stepped = evolve(field, params)
        self.assertEqual(stepped.mode_count, continuous.mode_count)
        scale = float(np.max(np.abs(continuous.cplus)))
        for k, cp, cm in zip(continuous.wavevectors, continuous.cplus, continuous.cminus):
            got_p, got_m = stepped.amplitudes(k)
            self.assertLess(abs(got_p - cp), 1e-12 * scale)
            self.assertLess(abs(got_m - cm), 1e-12 * scale)

    def test_mirror_image_evolves_with_opposite_alpha(self):
        field = random_powerlaw(5.0 / 3.0, 1.0, 0.3, 3, seed=6)
        velocity = abc_field(0.4, 0.3, 0.2)
        forward = evolve(field, EvolutionParams(alpha=0.2, eta=0.05, dt=0.01, t_end=0.1,
                                                velocity=velocity))
        image = evolve(mirror(field), EvolutionParams(alpha=-0.2, eta=0.05, dt=0.01, t_end=0.1,
                                                      velocity=mirror(velocity)))
        self.assertAlmostEqual(energy(image) / energy(forward), 1.0, places=10)
        self.assertAlmostEqual(helicity(image) / helicity(forward), -1.0, places=10)
        reflected = mirror(forward)
        for k, cp in zip(reflected.wavevectors[:20], reflected.cplus[:20]):
            got, _ = image.amplitudes(k)
            self.assertAlmostEqual(abs(got - cp), 0.0, places=10)
