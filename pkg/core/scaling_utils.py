"""
Shell spectra of quadratic and quartic field quantities and log-log slope fits
"""
import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from .exceptions import RejectedInputError
from .spectral_utils import (
    energy, field_and_potential_grids, grid_to_fourier, helicity, quadrature_grid_size,
    wavenumber_grid,
)

logger = logging.getLogger(__name__)

QUANTITIES = ('energy', 'helicity')
PRODUCT_QUANTITIES = ('energy_sq', 'helicity_sq', 'delta2', 'energy_pair')
MIN_FIT_SHELLS = 5
DEFAULT_FIT_RANGE = (4, None)


@dataclass(frozen=True, eq=False)
class ShellSpectrum:
    quantity: str
    k: np.ndarray
    value: np.ndarray
    count: np.ndarray
    slope: float = None
    slope_stderr: float = None
    fit_range: tuple = None
    notices: tuple = ()

    @property
    def density(self):
        """Shell value per lattice vector"""
        return np.where(self.count > 0, self.value / np.maximum(self.count, 1), 0.0)

    @property
    def total(self):
        return float(np.sum(self.value))


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    kmin: int
    kmax: int
    notice: str = ''


@dataclass(frozen=True)
class ArnoldCheck:
    U: float
    abs_chi: float
    kmin_active: float
    C_effective: float
    satisfied: bool
    equality: bool


def lattice_counts(kmax_shell):
    """Number of nonzero lattice vectors with round(|k|) = K, for K = 0..kmax_shell"""
    n = np.arange(-kmax_shell - 1, kmax_shell + 2)
    X, Y, Z = np.meshgrid(n, n, n, indexing='ij')
    shells = np.rint(np.sqrt(X ** 2 + Y ** 2 + Z ** 2)).astype(int).ravel()
    counts = np.bincount(shells, minlength=kmax_shell + 1)[:kmax_shell + 1]
    counts[0] = 0
    return counts


def _binned(quantity, shells, values, size=None):
    size = int(shells.max(initial=0)) + 1 if size is None else size
    value = np.bincount(shells, weights=values, minlength=size)[:size]
    return ShellSpectrum(quantity, np.arange(size), value, lattice_counts(size - 1))


def _fitted(spec, fit_range):
    """spec with its slope filled in, or a notice when the range cannot be fitted"""
    if fit_range is None:
        return spec
    try:
        fit = fit_slope(spec, *fit_range)
    except RejectedInputError as exc:
        return replace(spec, notices=spec.notices + (f'no slope fit: {exc}',))
    return with_fit(spec, fit)


def shell_spectrum(field, quantity='energy', fit_range=DEFAULT_FIT_RANGE):
    """Per-shell sums of 2 Vol (|c+|^2 + |c-|^2) or 2 Vol (|c+|^2 - |c-|^2)/|k|; they add up to U or chi"""
    if quantity not in QUANTITIES:
        raise RejectedInputError(f'unknown shell quantity {quantity!r}; expected one of {QUANTITIES}')
    kmag = field.kmag
    scale = 2.0 * field.box_length ** 3
    plus, minus = np.abs(field.cplus) ** 2, np.abs(field.cminus) ** 2
    values = scale * (plus + minus) if quantity == 'energy' else scale * (plus - minus) / kmag
    return _fitted(_binned(quantity, np.rint(kmag).astype(int), values), fit_range)


def _pair_spectrum(quantity, base, count):
    # the pair of shells (K, J) puts half its product on K and half on J
    return ShellSpectrum(quantity, base.k, base.value * base.total, count)


def product_spectrum(field, quantity, N=None, fit_range=DEFAULT_FIT_RANGE):
    """Shell spectrum of a quartic quantity.

    energy_sq and delta2 transform the pointwise density |B|^2 or (A, B) and
    shell-sum Vol |s_k|^2, so the shells add up to int (B,B)^2 or delta^(2).
    helicity_sq and energy_pair split the product of every pair of quadratic
    shells evenly between the two; they add up to chi^2 and U^2. energy_pair
    is counted per unit shell radius (the wave-plane multiplicity), so a
    per-mode power law k^-2a shows as k^(1-2a); the others per lattice vector.
    """
    if quantity not in PRODUCT_QUANTITIES:
        raise RejectedInputError(
            f'unknown product quantity {quantity!r}; expected one of {PRODUCT_QUANTITIES}')
    if quantity == 'helicity_sq':
        base = shell_spectrum(field, 'helicity', fit_range=None)
        return _fitted(_pair_spectrum(quantity, base, base.count), fit_range)
    if quantity == 'energy_pair':
        base = shell_spectrum(field, 'energy', fit_range=None)
        return _fitted(_pair_spectrum(quantity, base, base.k.copy()), fit_range)

    required = quadrature_grid_size(field, 4)
    if N is None:
        N = required
    notices = ()
    if N < required:
        logger.warning('product_spectrum: N=%d aliases the %s density; need N >= %d',
                       N, quantity, required)
        notices = (f'aliased: need N >= {required}',)
    B, A = field_and_potential_grids(field, N)
    density = np.sum(B * B, axis=0) if quantity == 'energy_sq' else np.sum(A * B, axis=0)
    s_hat = grid_to_fourier(density[None])[0]
    n1, n2, n3 = wavenumber_grid(N)
    shells = np.rint(np.sqrt(n1 ** 2 + n2 ** 2 + n3 ** 2)).astype(int).ravel()
    values = field.box_length ** 3 * np.abs(s_hat.ravel()) ** 2
    spectrum = _binned(quantity, shells, values)
    return _fitted(replace(spectrum, notices=notices), fit_range)


def fit_slope(spec, kmin=4, kmax=None, use_density=True):
    """Least-squares slope of log(value) against log(k) over [kmin, kmax]"""
    kmax = spec.k.max() // 2 if kmax is None else kmax
    y = spec.density if use_density else spec.value
    in_range = (spec.k >= kmin) & (spec.k <= kmax)
    ks, ys = spec.k[in_range], y[in_range]
    notice = ''
    if len(ys) and np.any(ys <= 0):
        positive = ys > 0
        runs, start = [], None
        for i, ok in enumerate(np.append(positive, False)):
            if ok and start is None:
                start = i
            elif not ok and start is not None:
                runs.append((start, i))
                start = None
        lo, hi = max(runs, key=lambda r: r[1] - r[0]) if runs else (0, 0)
        ks, ys = ks[lo:hi], ys[lo:hi]
        notice = (f'nonpositive {spec.quantity} shells in [{kmin}, {kmax}]; '
                  f'fit range shrunk to [{ks[0] if len(ks) else "-"}, {ks[-1] if len(ks) else "-"}]')
        logger.warning('fit_slope: %s', notice)
    if len(ks) < MIN_FIT_SHELLS:
        raise RejectedInputError(f'slope fit needs at least {MIN_FIT_SHELLS} positive shells, got {len(ks)}')
    fit = stats.linregress(np.log(ks), np.log(ys))
    return SlopeFit(float(fit.slope), float(fit.stderr), int(ks[0]), int(ks[-1]), notice)


def with_fit(spec, fit):
    return replace(spec, slope=fit.slope, slope_stderr=fit.stderr, fit_range=(fit.kmin, fit.kmax),
                   notices=spec.notices + ((fit.notice,) if fit.notice else ()))


def arnold_check(field):
    """U >= k_min |chi| with k_min the smallest populated |k|; U/|chi| is the effective constant"""
    U, chi = energy(field), abs(helicity(field))
    populated = (np.abs(field.cplus) > 0) | (np.abs(field.cminus) > 0)
    kmin = float(np.min(field.kmag[populated])) if np.any(populated) else 0.0
    C = U / chi if chi > 0 else float('inf')
    satisfied = U >= kmin * chi * (1 - 1e-12)
    equality = chi > 0 and abs(U - kmin * chi) <= 1e-12 * U
    if not satisfied:
        logger.error('arnold_check: U=%.6g < kmin |chi| = %.6g', U, kmin * chi)
    return ArnoldCheck(U, chi, kmin, C, bool(satisfied), bool(equality))
