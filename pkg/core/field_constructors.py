"""
Analytic and seeded test fields: ABC fields, circularly polarised waves,
power-law spectra and compactly supported magnetic tubes.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import special

from .exceptions import RejectedInputError, SupportError
from .spectral_utils import (
    BOX_LENGTH, Ball, GridField, SpectralField, divergence_norm, in_half_space,
)

logger = logging.getLogger(__name__)

PROFILES = ('bump', 'flat')
_BOX_CENTER = np.full(3, BOX_LENGTH / 2.0)


def seeded_generator(seed):
    """Counter-based generator so seeded output does not depend on platform or workers"""
    return np.random.Generator(np.random.Philox(int(seed)))


def abc_field(A, B, C):
    """B = (A sin z + C cos y, B sin x + A cos z, C sin y + B cos x)"""
    if A == 0 and B == 0 and C == 0:
        raise RejectedInputError('ABC field needs at least one nonzero amplitude')
    wavevectors = [(0, 0, 1), (0, 1, 0), (1, 0, 0)]
    vectors = [
        A * np.array([-0.5j, 0.5, 0.0]),
        C * np.array([0.5, 0.0, -0.5j]),
        B * np.array([0.0, -0.5j, 0.5]),
    ]
    populated = [i for i, amplitude in enumerate((A, C, B)) if amplitude != 0]
    return SpectralField.from_vectors(
        [wavevectors[i] for i in populated], [vectors[i] for i in populated],
    )


def circular_wave(B0, k):
    """Single positive-helicity wave along z: |B| = B0 and (A,B) = B0^2/k everywhere"""
    if int(k) != k or k < 1:
        raise RejectedInputError('circular wave needs an integer wave number k >= 1')
    return SpectralField([(0, 0, int(k))], [B0 / np.sqrt(2.0)], [0.0])


def random_powerlaw(alpha, gamma_plus, gamma_minus, kmax, seed):
    """|c+-| = gamma+- |k|^-alpha on every wave vector with 1 <= |k| <= kmax, random phases"""
    if kmax < 4:
        raise RejectedInputError('power-law field needs kmax >= 4')
    if alpha <= 1:
        raise RejectedInputError('power-law field needs alpha > 1')
    n = np.arange(-kmax, kmax + 1)
    grid = np.stack(np.meshgrid(n, n, n, indexing='ij'), axis=-1).reshape(-1, 3)
    kmag = np.linalg.norm(grid, axis=1)
    k = grid[in_half_space(grid) & (kmag >= 1) & (kmag <= kmax)]
    k = k[np.lexsort((k[:, 0], k[:, 1], k[:, 2]))]
    kmag = np.linalg.norm(k, axis=1)

    rng = seeded_generator(seed)
    phases = rng.random((len(k), 2))
    amplitude = kmag ** (-alpha)
    cplus = gamma_plus * amplitude * np.exp(2j * np.pi * phases[:, 0])
    cminus = gamma_minus * amplitude * np.exp(2j * np.pi * phases[:, 1])
    return SpectralField(k, cplus, cminus)


@dataclass(frozen=True)
class TubeSpec:
    R: float
    a: float
    kappa: int
    phi: float
    center: tuple = tuple(_BOX_CENTER)
    normal: tuple = (0.0, 0.0, 1.0)
    profile: str = 'bump'

    def __post_init__(self):
        if not (self.R > 0 and self.a > 0 and self.phi > 0):
            raise RejectedInputError('tube needs R, a, Phi > 0')
        if self.a >= self.R:
            raise RejectedInputError('tube radius a must be smaller than R')
        if int(self.kappa) != self.kappa:
            raise RejectedInputError('twist coefficient kappa must be an integer')
        if self.profile not in PROFILES:
            raise RejectedInputError(f'unknown profile {self.profile!r}; expected one of {PROFILES}')
        normal = np.asarray(self.normal, dtype=float)
        object.__setattr__(self, 'normal', tuple(normal / np.linalg.norm(normal)))
        object.__setattr__(self, 'center', tuple(float(c) for c in self.center))
        object.__setattr__(self, 'kappa', int(self.kappa))

    @property
    def axis_length(self):
        return 2.0 * np.pi * self.R

    @property
    def volume(self):
        return 2.0 * np.pi ** 2 * self.a ** 2 * self.R

    @property
    def helicity(self):
        return self.kappa * self.phi ** 2


def _bump_primitive(u):
    # integral of exp(-1/u) from 0 to u
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = u[pos] * np.exp(-1.0 / u[pos]) - special.exp1(1.0 / u[pos])
    return out


_BUMP_TOTAL = float(_bump_primitive(np.array([1.0]))[0])


def _profile(spec, r):
    """Axial field g(r) and enclosed axial flux Phi_t(r)"""
    s = np.clip(r / spec.a, 0.0, 1.0)
    inside = r < spec.a
    if spec.profile == 'flat':
        g = np.where(inside, spec.phi / (np.pi * spec.a ** 2), 0.0)
        return g, spec.phi * s ** 2
    with np.errstate(divide='ignore', over='ignore', invalid='ignore'):
        bump = np.where(inside, np.exp(1.0 - 1.0 / (1.0 - s ** 2)), 0.0)
    g0 = spec.phi / (np.pi * np.e * spec.a ** 2 * _BUMP_TOTAL)
    enclosed = spec.phi * (_BUMP_TOTAL - _bump_primitive(1.0 - s ** 2)) / _BUMP_TOTAL
    return g0 * bump, np.where(inside, enclosed, spec.phi)


def _frame(normal):
    n = np.asarray(normal)
    helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = helper - np.dot(helper, n) * n
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(n, e1)


class TubeField:
    """Analytic field and vector potential of one closed magnetic tube.

    Torus coordinates about the axis circle: rho is the distance from the
    symmetry axis, r the distance from the axis circle, e_phi the direction
    along the axis and e_pol = e_phi x e_r. Field lines lie on the surfaces
    r = const and wind kappa times around the axis per traversal.
    """

    def __init__(self, spec):
        self.spec = spec
        self.center = np.asarray(spec.center)
        self.n = np.asarray(spec.normal)
        self.e1, self.e2 = _frame(self.n)
        self.support = Ball(center=spec.center, radius=spec.R + spec.a)
        self.volume = spec.volume

    def _coordinates(self, points):
        d = np.atleast_2d(points) - self.center
        z = d @ self.n
        perp = d - z[:, None] * self.n
        rho = np.linalg.norm(perp, axis=1)
        on_axis = rho < 1e-14
        e_rho = np.where(on_axis[:, None], self.e1, perp / np.where(on_axis, 1.0, rho)[:, None])
        e_phi = np.cross(self.n, e_rho)
        s = rho - self.spec.R
        r = np.hypot(s, z)
        at_core = r < 1e-14
        e_r = np.where(
            at_core[:, None], e_rho,
            (s[:, None] * e_rho + z[:, None] * self.n) / np.where(at_core, 1.0, r)[:, None],
        )
        e_pol = np.cross(e_phi, e_r)
        return rho, r, e_phi, e_pol

    def evaluate(self, points):
        rho, r, e_phi, e_pol = self._coordinates(points)
        g, _ = _profile(self.spec, r)
        twist = self.spec.kappa * r * g / np.maximum(rho, 1e-300)
        values = g[:, None] * e_phi + twist[:, None] * e_pol
        return values[0] if np.ndim(points) == 1 else values

    def potential(self, points):
        rho, r, e_phi, e_pol = self._coordinates(points)
        _, enclosed = _profile(self.spec, r)
        with np.errstate(divide='ignore', invalid='ignore'):
            poloidal = np.where(r > 0, enclosed / (2.0 * np.pi * r), 0.0)
            axial = np.where(
                r < self.spec.a,
                self.spec.kappa * (self.spec.phi - enclosed) / (2.0 * np.pi * np.maximum(rho, 1e-300)),
                0.0,
            )
        values = poloidal[:, None] * e_pol + axial[:, None] * e_phi
        return values[0] if np.ndim(points) == 1 else values

    def field_and_potential(self, points):
        return self.evaluate(points), self.potential(points)

    def sample(self, n, rng):
        """Uniform points inside the solid torus"""
        spec = self.spec
        accepted = []
        count = 0
        while count < n:
            batch = max(2 * (n - count), 64)
            rho = rng.uniform(spec.R - spec.a, spec.R + spec.a, batch)
            z = rng.uniform(-spec.a, spec.a, batch)
            phi = rng.uniform(0.0, 2.0 * np.pi, batch)
            keep = (np.hypot(rho - spec.R, z) < spec.a) \
                & (rng.random(batch) * (spec.R + spec.a) < rho)
            pts = self.center + rho[keep, None] * (
                np.cos(phi[keep, None]) * self.e1 + np.sin(phi[keep, None]) * self.e2
            ) + z[keep, None] * self.n
            accepted.append(pts)
            count += len(pts)
        return np.concatenate(accepted)[:n]

    def axis_circle(self, n=2048):
        t = np.linspace(0.0, 2.0 * np.pi, n + 1)
        return self.center + self.spec.R * (
            np.cos(t)[:, None] * self.e1 + np.sin(t)[:, None] * self.e2
        )

    def seed_point(self, r, theta=0.0, phi=0.0):
        """Position at minor radius r, poloidal angle theta and axial angle phi"""
        e_rho = np.cos(phi) * self.e1 + np.sin(phi) * self.e2
        rho = self.spec.R + r * np.cos(theta)
        return self.center + rho * e_rho + r * np.sin(theta) * self.n

    def distance_to_axis(self, points):
        return self._coordinates(points)[1]


class TubePair:
    """Superposition of two disjoint tubes"""

    def __init__(self, spec1, spec2):
        self.tubes = (TubeField(spec1), TubeField(spec2))
        self.volume = spec1.volume + spec2.volume
        circles = np.concatenate([tube.axis_circle(512) for tube in self.tubes])
        center = np.mean(circles, axis=0)
        radius = float(np.max(np.linalg.norm(circles - center, axis=1))) + max(spec1.a, spec2.a)
        self.support = Ball(center=tuple(center), radius=radius)

    def evaluate(self, points):
        return sum(tube.evaluate(points) for tube in self.tubes)

    def potential(self, points):
        return sum(tube.potential(points) for tube in self.tubes)

    def field_and_potential(self, points):
        return self.evaluate(points), self.potential(points)

    def sample(self, n, rng):
        weights = np.array([tube.volume for tube in self.tubes])
        first = int(np.sum(rng.random(n) < weights[0] / weights.sum()))
        points = np.concatenate([self.tubes[0].sample(first, rng), self.tubes[1].sample(n - first, rng)])
        return points[rng.permutation(n)]


def tube_field(spec):
    _check_inside_box(Ball(center=spec.center, radius=spec.R + spec.a))
    return TubeField(spec)


def hopf_pair(R, a, phi1, phi2, center=None, profile='bump'):
    """Two untwisted tubes whose axis circles form a positively oriented Hopf link"""
    c = _BOX_CENTER if center is None else np.asarray(center, dtype=float)
    shift = np.array([R / 2.0, 0.0, 0.0])
    spec1 = TubeSpec(R=R, a=a, kappa=0, phi=phi1, center=tuple(c - shift), normal=(0.0, 0.0, 1.0),
                     profile=profile)
    spec2 = TubeSpec(R=R, a=a, kappa=0, phi=phi2, center=tuple(c + shift), normal=(0.0, 1.0, 0.0),
                     profile=profile)
    return spec1, spec2


def tube_pair(spec1, spec2):
    """Analytic Hopf-linked pair of untwisted tubes"""
    # circular import: the Gauss sum lives with the tracer
    from .fieldline_utils import polyline_gauss_integral

    if spec1.kappa != 0 or spec2.kappa != 0:
        raise RejectedInputError('two_tubes takes untwisted tubes (kappa = 0)')
    first, second = TubeField(spec1), TubeField(spec2)
    gap = float(np.min(second.distance_to_axis(first.axis_circle(4096))))
    if gap <= spec1.a + spec2.a:
        raise SupportError(f'tube supports overlap (axis separation {gap:.4f})')
    linking = polyline_gauss_integral(first.axis_circle(1024), second.axis_circle(1024))
    if abs(abs(linking) - 1.0) > 1e-2:
        raise RejectedInputError(f'axis circles do not form a Hopf link (linking {linking:.3f})')
    pair = TubePair(spec1, spec2)
    _check_inside_box(pair.support)
    return pair


def sample_on_grid(source, N):
    """GridField of an analytic field with divergence diagnostics"""
    axis = np.arange(N) * (BOX_LENGTH / N)
    X, Y, Z = np.meshgrid(axis, axis, axis, indexing='ij')
    points = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
    data = source.evaluate(points).T.reshape(3, N, N, N)
    grid = GridField(data, support=source.support)
    max_b = grid.max_norm
    div = divergence_norm(grid)
    grid.diagnostics.update({
        'divergence_max': div,
        'divergence_relative': div / max_b if max_b > 0 else 0.0,
    })
    return grid


def twisted_tube(spec, N):
    """Grid samples of one twisted tube; divergence error measured, not assumed"""
    grid = sample_on_grid(tube_field(spec), N)
    ratio = spec.a / spec.R
    grid.diagnostics['a_over_R'] = ratio
    grid.diagnostics['divergence_constant'] = grid.diagnostics['divergence_relative'] / ratio
    logger.info('twisted tube N=%d: max|div B|/max|B| = %.3e (c = %.3e at a/R = %.3f)',
                N, grid.diagnostics['divergence_relative'],
                grid.diagnostics['divergence_constant'], ratio)
    return grid


def two_tubes(spec1, spec2, N):
    grid = sample_on_grid(tube_pair(spec1, spec2), N)
    logger.info('two tubes N=%d: max|div B|/max|B| = %.3e', N, grid.diagnostics['divergence_relative'])
    return grid


def cross_section_flux(source, spec, n_r=24, n_theta=64):
    """Flux of `source` through the tube cross-section at axial angle 0"""
    tube = TubeField(spec)
    nodes, weights = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * spec.a * (nodes + 1.0)
    w_r = 0.5 * spec.a * weights
    theta = np.arange(n_theta) * (2.0 * np.pi / n_theta)
    rr, tt = np.meshgrid(r, theta, indexing='ij')
    points = np.array([tube.seed_point(ri, ti) for ri, ti in zip(rr.ravel(), tt.ravel())])
    normal = np.cross(tube.n, tube.e1)
    flux_density = source.evaluate(points) @ normal
    return float(np.sum(flux_density * (w_r[:, None] * rr * (2.0 * np.pi / n_theta)).ravel()))


def _check_inside_box(ball):
    inscribed = Ball.inscribed()
    offset = np.linalg.norm(np.asarray(ball.center) - np.asarray(inscribed.center))
    if offset + ball.radius >= inscribed.radius:
        raise SupportError(
            f'support ball of radius {ball.radius:.3f} does not fit strictly inside the box'
        )
