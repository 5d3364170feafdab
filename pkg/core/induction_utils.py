"""
Pseudo-spectral integration of the induction equation

    dB/dt = curl(v x B) + alpha curl B - eta curl curl B

in the helical basis. The diagonal part (+-alpha|k| - eta|k|^2) is carried
by an exact integrating factor; curl(v x B) is evaluated on a 3/2-padded
grid and advanced with the classical fourth-order Runge-Kutta stages
(integrating-factor RK4).
"""
import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import CFLError, RejectedInputError
from .invariant_utils import delta2
from .spectral_utils import (
    SpectralField, curl, current_helicity, energy, field_and_potential_grids, fourier_to_grid,
    grid_quadrature, grid_to_fourier, helical_basis_arrays, helicity, in_half_space,
    is_beltrami, minimum_grid_size, quadrature_grid_size, synthesize, to_fourier,
    wavenumber_grid,
)

logger = logging.getLogger(__name__)

CFL_LIMIT = 0.5
TOP_SHELL_FRACTION = 1e-6


@dataclass(frozen=True)
class EvolutionParams:
    alpha: float = 0.0
    eta: float = 0.0
    dt: float = 1e-2
    t_end: float = 1.0
    velocity: SpectralField = None
    dealias: str = '3/2'

    def __post_init__(self):
        if self.eta < 0:
            raise RejectedInputError('magnetic diffusivity eta must be >= 0')
        if self.dt <= 0:
            raise RejectedInputError('time step dt must be positive')
        if self.t_end < 0:
            raise RejectedInputError('t_end must be >= 0')
        if self.dealias != '3/2':
            raise RejectedInputError(f'unknown dealias rule {self.dealias!r}')
        if self.velocity is not None and self.velocity.compressive_norm > 1e-12:
            raise RejectedInputError('velocity field must be divergence-free')


def growth_rates(kmag, params):
    """Diagonal rates of the + and - helical components"""
    return params.alpha * kmag - params.eta * kmag ** 2, -params.alpha * kmag - params.eta * kmag ** 2


class InductionSolver:
    """Helical amplitudes of B on a full N^3 wave-number grid, advanced in time"""

    def __init__(self, field, params, N=None):
        self.params = params
        N = self.grid_size(field, params) if N is None else N
        self.N = N + (N % 2)
        self.M = 3 * self.N // 2 + (3 * self.N // 2) % 2
        self.t = 0.0

        n1, n2, n3 = wavenumber_grid(self.N)
        self.K = np.stack([n1, n2, n3], axis=-1).astype(float)
        self.kmag = np.linalg.norm(self.K, axis=-1)
        self.resolved = (np.max(np.abs(self.K), axis=-1) < self.N / 2) & (self.kmag > 0)
        hplus = np.zeros(self.K.shape, dtype=complex)
        hminus = np.zeros(self.K.shape, dtype=complex)
        hplus[self.resolved], hminus[self.resolved] = helical_basis_arrays(self.K[self.resolved])
        self.hplus, self.hminus = hplus, hminus

        self.cplus, self.cminus = self._project(to_fourier(field, self.N))
        self.v_grid = None
        self.v_max = 0.0
        if params.velocity is not None:
            self.v_grid = self._padded_grid(to_fourier(params.velocity, self.N))
            self.v_max = float(np.max(np.linalg.norm(self.v_grid, axis=0)))
        self.flags = set()
        self._check_resolution()

    @staticmethod
    def grid_size(field, params):
        """Default N: room for field and velocity wave numbers plus two shells of transfer"""
        kmax = field.kmax + (params.velocity.kmax if params.velocity is not None else 0)
        return max(minimum_grid_size(field), 2 * (kmax + 2) + 2)

    def _project(self, coeffs):
        b = np.moveaxis(coeffs, 0, -1)
        cplus = np.where(self.resolved, np.sum(b * np.conj(self.hplus), axis=-1), 0.0)
        cminus = np.where(self.resolved, np.sum(b * np.conj(self.hminus), axis=-1), 0.0)
        return cplus, cminus

    def _vectors(self, cplus, cminus):
        b = cplus[..., None] * self.hplus + cminus[..., None] * self.hminus
        return np.moveaxis(b, -1, 0)

    def _padded_grid(self, coeffs):
        n = np.rint(np.fft.fftfreq(self.N, d=1.0 / self.N)).astype(int)
        keep = np.nonzero(np.abs(n) < self.N / 2)[0]
        dst = n[keep] % self.M
        padded = np.zeros((3, self.M, self.M, self.M), dtype=complex)
        padded[np.ix_(range(3), dst, dst, dst)] = coeffs[np.ix_(range(3), keep, keep, keep)]
        return fourier_to_grid(padded)

    def _truncate(self, coeffs):
        n = np.rint(np.fft.fftfreq(self.N, d=1.0 / self.N)).astype(int)
        src = n % self.M
        return coeffs[np.ix_(range(3), src, src, src)]

    def rates(self, dt):
        lplus, lminus = growth_rates(self.kmag, self.params)
        return np.exp(lplus * dt), np.exp(lminus * dt)

    def nonlinear(self, cplus, cminus):
        """Helical components of curl(v x B), dealiased"""
        if self.v_grid is None:
            return np.zeros_like(cplus), np.zeros_like(cminus)
        B = self._padded_grid(self._vectors(cplus, cminus))
        w_hat = self._truncate(grid_to_fourier(np.cross(self.v_grid, B, axis=0)))
        curl_hat = 1j * np.cross(np.moveaxis(self.K, -1, 0), w_hat, axis=0)
        return self._project(curl_hat)

    def check_cfl(self, dt):
        courant = abs(dt) * self.v_max * (self.N / 2)
        if courant > CFL_LIMIT:
            raise CFLError(f'dt={dt} gives dt*max|v|*kmax = {courant:.3f} > {CFL_LIMIT}')

    def step(self, dt=None):
        dt = self.params.dt if dt is None else dt
        self.check_cfl(dt)
        hp, hm = self.rates(dt / 2)
        cp, cm = self.cplus, self.cminus

        k1p, k1m = self.nonlinear(cp, cm)
        k2p, k2m = self.nonlinear(hp * (cp + dt / 2 * k1p), hm * (cm + dt / 2 * k1m))
        k3p, k3m = self.nonlinear(hp * cp + dt / 2 * k2p, hm * cm + dt / 2 * k2m)
        k4p, k4m = self.nonlinear(hp * hp * cp + dt * hp * k3p, hm * hm * cm + dt * hm * k3m)

        self.cplus = hp * hp * cp + dt / 6 * (hp * hp * k1p + 2 * hp * (k2p + k3p) + k4p)
        self.cminus = hm * hm * cm + dt / 6 * (hm * hm * k1m + 2 * hm * (k2m + k3m) + k4m)
        self.t += dt
        self._check_resolution()
        return self

    def _check_resolution(self):
        power = np.abs(self.cplus) ** 2 + np.abs(self.cminus) ** 2
        total = float(np.sum(power))
        top = np.rint(self.kmag) >= self.N // 2 - 1
        fraction = float(np.sum(power[top])) / total if total > 0 else 0.0
        if fraction > TOP_SHELL_FRACTION and 'top-shell' not in self.flags:
            logger.warning('induction: %.2e of the energy sits in the top shell at t=%.4g (N=%d)',
                           fraction, self.t, self.N)
            self.flags.add('top-shell')

    def field(self):
        """Current state as a SpectralField"""
        k = self.K.reshape(-1, 3).astype(np.int64)
        keep = self.resolved.reshape(-1) & in_half_space(k)
        cp, cm = self.cplus.reshape(-1)[keep], self.cminus.reshape(-1)[keep]
        nonzero = (np.abs(cp) > 0) | (np.abs(cm) > 0)
        return SpectralField(k[keep][nonzero], cp[nonzero], cm[nonzero])

    def run(self, snapshot_every=None):
        """Yield (t, field) at t=0, every `snapshot_every` and at t_end"""
        params = self.params
        n_steps = int(round(params.t_end / params.dt))
        every = n_steps if not snapshot_every else max(1, int(round(snapshot_every / params.dt)))
        yield self.t, self.field()
        for i in range(1, n_steps + 1):
            self.step()
            if i % every == 0 or i == n_steps:
                yield self.t, self.field()


def step_induction(field, params, N=None):
    """Field one step params.dt later"""
    return InductionSolver(field, params, N).step().field()


def evolve(field, params, N=None):
    """Field at params.t_end, stepped on one grid fixed from the initial field"""
    N = InductionSolver.grid_size(field, params) if N is None else N
    for _ in range(int(round(params.t_end / params.dt))):
        field = step_induction(field, params, N)
    return field


def beltrami_closed_form(field, params, t):
    """Exact solution without velocity: each helical amplitude times exp(rate t)"""
    if params.velocity is not None:
        raise RejectedInputError('closed form holds only without a velocity field')
    lplus, lminus = growth_rates(field.kmag, params)
    return field.with_amplitudes(field.cplus * np.exp(lplus * t), field.cminus * np.exp(lminus * t))


def helicity_balance(field, params, N=None):
    """(predicted, measured) dchi/dt: -2 eta chi^c + 2 alpha U against a centred difference"""
    predicted = -2 * params.eta * current_helicity(field) + 2 * params.alpha * energy(field)
    forward = InductionSolver(field, params, N).step(params.dt).field()
    backward = InductionSolver(field, params, N).step(-params.dt).field()
    measured = (helicity(forward) - helicity(backward)) / (2 * params.dt)
    return predicted, measured


def chi2_closed_form(field, chi2_0, params, t):
    """chi^(2)(t) = chi^(2)(0) exp(4 lambda t (alpha - lambda eta)) for a lambda-eigenfield"""
    lam = is_beltrami(field)
    if lam is None:
        raise RejectedInputError('chi2 closed form needs a Beltrami (curl eigen) field')
    return chi2_0 * np.exp(4 * lam * t * (params.alpha - lam * params.eta))


def _lp(values, p, box_length):
    return grid_quadrature(np.abs(values) ** p, box_length)


def theorem2_rhs(field, params, N=None):
    """Upper bound on |d sqrt(chi^(2))/dt| from grid quadratures of B, A and their curls"""
    if field.mode_count == 0 or (params.alpha == 0 and params.eta == 0):
        return 0.0
    if N is None:
        N = min(quadrature_grid_size(field, 8), max(quadrature_grid_size(field, 4), 64))
    L = field.box_length
    B, A = field_and_potential_grids(field, N)
    curl_b = synthesize(curl(field), N).data
    curl2 = curl(curl(field))
    curl2_b = synthesize(curl2, N).data

    def dot(u, w):
        return np.sum(u * w, axis=0)

    a4 = _lp(np.linalg.norm(A, axis=0), 4, L) ** 0.25
    t1 = np.sqrt(_lp(dot(curl_b, B), 2, L))
    t2 = np.sqrt(_lp(dot(curl2_b, A), 2, L))
    t3 = np.sqrt(_lp(dot(B, B), 2, L))
    t4 = np.sqrt(_lp(dot(curl_b, A), 2, L))
    t5 = _lp(np.linalg.norm(curl2_b, axis=0), 8, L) ** 0.125 * a4
    t6 = _lp(np.linalg.norm(curl_b, axis=0), 8, L) ** 0.125 * a4

    shells = np.rint(curl2.kmag)
    power = np.abs(curl2.cplus) ** 2 + np.abs(curl2.cminus) ** 2
    top = shells == shells.max()
    if len(np.unique(shells)) > 1 and np.sum(power[top]) > 0.5 * np.sum(power):
        logger.warning('theorem2_rhs: curl curl B is dominated by the top shell; bound unresolved')

    eta, alpha = params.eta, abs(params.alpha)
    return float(eta * (t1 + t2 + t5) + alpha * (t3 + t4 + t6))


def evolve_series(field, params, snapshot_every=None, N=None):
    """Rows (t, U, chi, chiC, delta2, theorem2_rhs) and the snapshots they came from"""
    solver = InductionSolver(field, params, N)
    rows, snapshots = [], []
    for t, snapshot in solver.run(snapshot_every):
        rows.append({
            't': t,
            'U': energy(snapshot),
            'chi': helicity(snapshot),
            'chiC': current_helicity(snapshot),
            'delta2': delta2(snapshot).value,
            'theorem2_rhs': theorem2_rhs(snapshot, params),
        })
        snapshots.append((t, snapshot))
    logger.info('evolved %d steps to t=%.4g (U %.6g -> %.6g)', len(rows), solver.t,
                rows[0]['U'], rows[-1]['U'])
    return rows, snapshots

