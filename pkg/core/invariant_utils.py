"""
Helicity invariants of a field: exact quadratures (U, chi, chi^c, delta^(2)),
Monte Carlo line estimators (chi^(2), chi^[2], delta^[2]), the inequality
chain between them and the two ergodic dispersion identities.
"""
import logging
from dataclasses import dataclass, field as dataclass_field, replace

import numpy as np

from .exceptions import RejectedInputError
from .field_constructors import sample_on_grid, seeded_generator
from .fieldline_utils import (
    DEFAULT_ATOL, DEFAULT_RTOL, asymptotic_linking, gauss_linking, lambda_A,
    mean_square_density, trace_closed_line, trace_lines,
)
from .spectral_utils import (
    VOLUME, GridField, SpectralField, analyze, cached_evaluator, current_helicity, energy,
    field_and_potential_grids, fourier_to_grid, grid_potential, grid_quadrature, grid_to_fourier,
    helicity, quadrature_grid_size,
)

logger = logging.getLogger(__name__)

DEFAULT_T_LADDER = (250.0, 500.0, 1000.0)
MIN_SEEDS = 16
SIGMA_LEVEL = 2.0
_NUMERICAL_SLACK = 1e-9
BIOT_SAVART_GRID = 64
_DELTA2_FLOOR = 1e-4


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float = 0.0
    systematic: float = 0.0
    samples: int = 0
    ladder: tuple = ()
    parameters: dict = dataclass_field(default_factory=dict)
    flags: tuple = ()

    @property
    def sigma(self):
        return float(np.hypot(self.stderr, self.systematic))

    def scaled(self, factor):
        return Estimate(self.value * factor, self.stderr * abs(factor), self.systematic * abs(factor),
                        self.samples, tuple(v * factor for v in self.ladder), self.parameters, self.flags)

    def squared(self):
        return Estimate(self.value ** 2, 2 * abs(self.value) * self.stderr,
                        2 * abs(self.value) * self.systematic, self.samples)


def exact(value):
    return Estimate(float(value))


@dataclass(frozen=True)
class Verdict:
    name: str
    lhs: float
    rhs: float
    satisfied: bool
    margin: float
    status: str


@dataclass(frozen=True)
class InvariantReport:
    volume: float
    U: Estimate
    chi: Estimate
    chiC: Estimate = None
    delta2: Estimate = None
    deltaBracket2: Estimate = None
    chi2: Estimate = None
    chiBracket2: Estimate = None
    verdicts: tuple = ()

    def rows(self):
        """(quantity, estimate) pairs in report order, absent quantities skipped"""
        names = ('U', 'chi', 'chiC', 'delta2', 'deltaBracket2', 'chi2', 'chiBracket2')
        return [(name, getattr(self, name)) for name in names if getattr(self, name) is not None]

    @property
    def failed(self):
        return [v for v in self.verdicts if v.status == 'fail']


def domain_volume(field):
    """Vol(D): the torus for spectral fields, the support for compact ones"""
    if isinstance(field, SpectralField):
        return VOLUME
    if isinstance(field, GridField):
        return field.support.volume if field.support is not None else field.box_length ** 3
    return float(field.volume)


def sample_domain(field, n, rng):
    """Uniform points in Vol(D)"""
    if isinstance(field, SpectralField):
        return rng.random((n, 3)) * field.box_length
    if isinstance(field, GridField):
        if field.support is None:
            return rng.random((n, 3)) * field.box_length
        return field.support.sample(n, rng)
    return field.sample(n, rng)


def _is_compact(field):
    if isinstance(field, SpectralField):
        return False
    if isinstance(field, GridField):
        return field.support is not None
    return getattr(field, 'support', None) is not None


def _resample(data, M):
    """Spectral interpolation of a real (3, N, N, N) grid onto M >= N points per axis"""
    N = data.shape[1]
    coeffs = grid_to_fourier(data)
    n = np.rint(np.fft.fftfreq(N, d=1.0 / N)).astype(int)
    keep = np.abs(n) < N / 2
    src = np.nonzero(keep)[0]
    dst = n[keep] % M
    padded = np.zeros((3, M, M, M), dtype=complex)
    padded[np.ix_(range(3), dst, dst, dst)] = coeffs[np.ix_(range(3), src, src, src)]
    return fourier_to_grid(padded)


def basic_invariants(field, n_samples=200_000, seed=0):
    """U, chi and chi^c; Monte Carlo over the support for analytic compact fields"""
    if isinstance(field, SpectralField):
        return exact(energy(field)), exact(helicity(field)), exact(current_helicity(field))
    if isinstance(field, GridField):
        spectral = analyze(field)
        return exact(energy(spectral)), exact(helicity(spectral)), exact(current_helicity(spectral))
    points = sample_domain(field, n_samples, seeded_generator(seed))
    B, A = field.field_and_potential(points)
    vol = domain_volume(field)
    return _mean_estimate(np.sum(B * B, axis=1), vol), _mean_estimate(np.sum(A * B, axis=1), vol), None


def _mean_estimate(values, scale, **kwargs):
    values = np.asarray(values, dtype=float)
    stderr = float(np.std(values, ddof=1) / np.sqrt(len(values))) if len(values) > 1 else 0.0
    return Estimate(float(np.mean(values)) * scale, stderr * scale, samples=len(values), **kwargs)


def _grid_delta2(g):
    """(int (A, B)^2, int (A, B)) by grid quadrature"""
    density = np.sum(grid_potential(g) * g.data, axis=0)
    return grid_quadrature(density ** 2, g.box_length), grid_quadrature(density, g.box_length)


def delta2(field, N=None, tolerance=1e-2):
    """delta^(2) = int (A, B)^2 dD.

    A is the Biot-Savart potential for compactly supported fields and the
    Coulomb-gauge one on the torus. Analytic compact fields are sampled on an
    N^3 grid first (default BIOT_SAVART_GRID). Grid values are refined N -> 2N
    by spectral interpolation; a change beyond `tolerance`, measured against
    the value or the floor max(chi^2/Vol, 1e-4 (U l)^2/Vol) with l the support
    radius, flags the estimate 'unresolved'.
    """
    if isinstance(field, SpectralField):
        if field.mode_count == 0:
            return exact(0.0)
        N = quadrature_grid_size(field, 4) if N is None else N
        B, A = field_and_potential_grids(field, N)
        value = grid_quadrature(np.sum(A * B, axis=0) ** 2, field.box_length)
        return Estimate(value, parameters={'N': N})
    if not isinstance(field, GridField):
        if not _is_compact(field):
            raise RejectedInputError(f'delta2 cannot sample a field of type {type(field).__name__}')
        field = sample_on_grid(field, BIOT_SAVART_GRID if N is None else N)

    value, chi = _grid_delta2(field)
    M = 2 * field.N
    fine = GridField(_resample(field.data, M), support=field.support, box_length=field.box_length)
    refined, _ = _grid_delta2(fine)
    vol = domain_volume(field)
    U = grid_quadrature(np.sum(field.data ** 2, axis=0), field.box_length)
    length = field.support.radius if field.support is not None else field.box_length / (2.0 * np.pi)
    floor = max(chi ** 2 / vol, _DELTA2_FLOOR * (U * length) ** 2 / vol, 1e-300)
    disagreement = abs(refined - value) / max(abs(refined), floor)
    flags = ()
    if disagreement > tolerance:
        logger.warning('delta2: refinement N=%d -> %d changes the value by %.2f%%',
                       field.N, M, 100 * disagreement)
        flags = ('unresolved',)
    gauge = 'biot_savart' if field.support is not None else 'coulomb'
    return Estimate(refined, systematic=abs(refined - value),
                    parameters={'N': field.N, 'M': M, 'gauge': gauge}, flags=flags)


def _bracket_kernel(B1, B2, r):
    d = np.linalg.norm(r, axis=1)
    return (np.sum(B1 * np.cross(B2, r), axis=1) / (4.0 * np.pi * d ** 3)) ** 2, d


def delta_bracket2(field, n_pairs=200_000, cutoff=None, seed=0):
    """Monte Carlo of int int (B(x1), B(x2) x (x1 - x2))^2 / (4 pi |x1 - x2|^3)^2.

    Pairs closer than the cutoff (default: one grid spacing) are dropped;
    the difference to the estimate at twice the cutoff is reported as the
    cutoff bias.
    """
    if not _is_compact(field):
        raise RejectedInputError('delta_bracket2 needs a compactly supported field')
    if cutoff is None:
        cutoff = field.spacing if isinstance(field, GridField) else 0.02
    evaluator = cached_evaluator(field)
    rng = seeded_generator(seed)
    x1 = sample_domain(field, n_pairs, rng)
    x2 = sample_domain(field, n_pairs, rng)
    values, d = _bracket_kernel(evaluator.evaluate(x1), evaluator.evaluate(x2), x1 - x2)
    values = np.where(d > 0, values, 0.0)
    vol2 = domain_volume(field) ** 2
    at_h = _mean_estimate(np.where(d < cutoff, 0.0, values), vol2)
    at_2h = float(np.mean(np.where(d < 2 * cutoff, 0.0, values))) * vol2
    bias = abs(at_h.value - at_2h)
    logger.info('delta_bracket2 = %.6g +- %.2g (cutoff bias %.2g at h=%.3g)',
                at_h.value, at_h.stderr, bias, cutoff)
    return Estimate(at_h.value, at_h.stderr, bias, n_pairs,
                    ladder=(at_h.value, at_2h), parameters={'cutoff': cutoff})


def _seed_lines(field, seeds, T, rtol, atol, threads, closed):
    if closed:
        return [trace_closed_line(field, x0, T, rtol=rtol, atol=atol) for x0 in seeds]
    return trace_lines(field, seeds, T, rtol=rtol, atol=atol, threads=threads)


def chi2_estimate(field, n_seeds=64, t_ladder=DEFAULT_T_LADDER, seed=0, rtol=DEFAULT_RTOL,
                  atol=DEFAULT_ATOL, threads=1, closed=False, lines=None):
    """chi^(2) = Vol mean(Lambda_A(T_max; x_i)^2) over uniform seeds.

    The spread over the T ladder is the systematic uncertainty. With
    closed=True each line is followed for exactly one period (t_ladder[-1]
    bounds the search) and the ladder is not used.
    """
    if n_seeds < MIN_SEEDS:
        raise RejectedInputError(f'chi2_estimate needs at least {MIN_SEEDS} seeds')
    ladder = tuple(sorted(float(T) for T in t_ladder))
    evaluator = cached_evaluator(field)
    if lines is None:
        seeds = sample_domain(field, n_seeds, seeded_generator(seed))
        lines = _seed_lines(evaluator, seeds, ladder[-1], rtol, atol, threads, closed)
    vol = domain_volume(field)

    if closed:
        squares = np.array([lambda_A(line) ** 2 for line in lines])
        return _mean_estimate(squares, vol,
                              parameters={'n_seeds': len(lines), 'closed': True, 'seed': seed})

    per_T = np.array([[lambda_A(line, T) ** 2 for line in lines] for T in ladder])
    means = vol * per_T.mean(axis=1)
    stderr = vol * float(np.std(per_T[-1], ddof=1) / np.sqrt(len(lines)))
    systematic = float(np.ptp(means))
    flags = ()
    if systematic > 3 * stderr + _NUMERICAL_SLACK * abs(means[-1]):
        logger.warning('chi2_estimate: T-ladder spread %.3g exceeds 3x the statistical error %.3g',
                       systematic, stderr)
        flags = ('non-convergent ladder',)
    return Estimate(float(means[-1]), stderr, systematic, len(lines), ladder=tuple(means),
                    parameters={'n_seeds': len(lines), 't_ladder': ladder, 'seed': seed},
                    flags=flags)


def chi_bracket2_estimate(field, n_pairs=16, T=1000.0, seed=0, rtol=DEFAULT_RTOL,
                          atol=DEFAULT_ATOL, threads=1, closed=False, n_samples=2048):
    """chi^[2] = Vol^2 mean(Lambda(T; x1, x2)^2) over independent seed pairs"""
    if not _is_compact(field):
        raise RejectedInputError('chi_bracket2_estimate needs a compactly supported field')
    if n_pairs < MIN_SEEDS:
        raise RejectedInputError(f'chi_bracket2_estimate needs at least {MIN_SEEDS} pairs')
    evaluator = cached_evaluator(field)
    seeds = sample_domain(field, 2 * n_pairs, seeded_generator(seed))
    lines = _seed_lines(evaluator, seeds, T, rtol, atol, threads, closed)
    span = None if closed else T
    linking = np.array([
        asymptotic_linking(lines[2 * i], lines[2 * i + 1], span, n_samples) for i in range(n_pairs)
    ])
    return _mean_estimate(linking ** 2, domain_volume(field) ** 2,
                          parameters={'n_pairs': n_pairs, 'T': T, 'closed': closed, 'seed': seed})


def pair_linking_table(lines_a, lines_b, n_samples=1024):
    """Gauss linking numbers of every closed line in lines_a with every one in lines_b"""
    return np.array([[gauss_linking(a, b, n_samples=n_samples) for b in lines_b] for a in lines_a])


def _verdict(name, lhs, rhs, sigma, reported=False):
    margin = rhs - lhs
    slack = SIGMA_LEVEL * sigma + _NUMERICAL_SLACK * max(abs(lhs), abs(rhs))
    satisfied = bool(lhs <= rhs + slack)
    status = 'reported' if reported else ('pass' if satisfied else 'fail')
    return Verdict(name, float(lhs), float(rhs), satisfied, float(margin), status)


def check_inequalities(report, volume=None):
    """Inequality chain at 2 sigma; printed normalisations are reported without a verdict"""
    vol = report.volume if volume is None else volume
    verdicts = []
    chi_sq = report.chi.squared()
    if report.chi2 is not None:
        vchi2 = report.chi2.scaled(vol)
        verdicts.append(_verdict('chi^2 <= Vol chi2', chi_sq.value, vchi2.value,
                                 np.hypot(chi_sq.sigma, vchi2.sigma)))
        if report.delta2 is not None:
            verdicts.append(_verdict('chi2 <= delta2', report.chi2.value, report.delta2.value,
                                     np.hypot(report.chi2.sigma, report.delta2.sigma)))
    if report.chiBracket2 is not None:
        if report.chi2 is not None:
            v2 = report.chiBracket2.scaled(vol ** 2)
            verdicts.append(_verdict('Vol chi2 <= Vol^2 chiB2', vchi2.value, v2.value,
                                     np.hypot(vchi2.sigma, v2.sigma)))
            verdicts.append(_verdict('2 chi2/Vol <= chiB2 (printed)', 2 * report.chi2.value / vol,
                                     report.chiBracket2.value, 0.0, reported=True))
            verdicts.append(_verdict('2 chi^2/Vol^2 <= 2 chi2/Vol (printed)', 2 * chi_sq.value / vol ** 2,
                                     2 * report.chi2.value / vol, 0.0, reported=True))
        if report.deltaBracket2 is not None:
            verdicts.append(_verdict('chiB2 <= deltaB2', report.chiBracket2.value,
                                     report.deltaBracket2.value,
                                     np.hypot(report.chiBracket2.sigma, report.deltaBracket2.sigma)))
    if report.deltaBracket2 is not None and report.delta2 is not None:
        vb = report.deltaBracket2.scaled(vol)
        verdicts.append(_verdict('delta2 <= Vol deltaB2', report.delta2.value, vb.value,
                                 np.hypot(report.delta2.sigma, vb.sigma)))
        verdicts.append(_verdict('delta2 <= deltaB2/Vol (printed)', report.delta2.value,
                                 report.deltaBracket2.value / vol, 0.0, reported=True))
    for verdict in verdicts:
        if verdict.status == 'fail':
            logger.warning('inequality %s violated: lhs=%.6g rhs=%.6g', verdict.name, verdict.lhs,
                           verdict.rhs)
    return verdicts


def dispersion_along_lines(field, lines, T=None):
    """Vol mean over lines of the time variance of (A, B) about Lambda_A"""
    values = []
    for line in lines:
        span = line.T if T is None else T
        values.append(mean_square_density(line, span) - lambda_A(line, span) ** 2)
    return _mean_estimate(values, domain_volume(field), parameters={'lines': len(lines)})


def dispersion_of_line_means(field, lines, T=None):
    """Vol times the variance of Lambda_A(T; x_i) over seeds"""
    means = np.array([lambda_A(line, T) for line in lines])
    n = len(means)
    vol = domain_volume(field)
    variance = float(np.var(means, ddof=1)) if n > 1 else 0.0
    # stderr of a sample variance from the fourth central moment
    centred = means - means.mean()
    stderr = float(np.sqrt(max(np.mean(centred ** 4) - variance ** 2, 0.0) / n)) if n > 1 else 0.0
    return Estimate(vol * variance, vol * stderr, samples=n, parameters={'lines': n})


def assemble_report(field, n_seeds=64, t_ladder=DEFAULT_T_LADDER, seed=0, n_pairs=None,
                    pair_T=None, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, threads=1, closed=False,
                    bracket_samples=200_000):
    """All invariants of a field plus the inequality verdicts"""
    U, chi, chiC = basic_invariants(field, seed=seed)
    report = InvariantReport(
        volume=domain_volume(field), U=U, chi=chi, chiC=chiC,
        delta2=delta2(field),
        chi2=chi2_estimate(field, n_seeds, t_ladder, seed, rtol, atol, threads, closed),
    )
    if n_pairs and _is_compact(field):
        T = pair_T if pair_T is not None else max(t_ladder)
        report = replace(
            report,
            chiBracket2=chi_bracket2_estimate(field, n_pairs, T, seed + 1, rtol, atol,
                                              threads, closed),
            deltaBracket2=delta_bracket2(field, bracket_samples, seed=seed + 2),
        )
    verdicts = tuple(check_inequalities(report))
    return replace(report, verdicts=verdicts)
