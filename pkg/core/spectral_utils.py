"""
Helical spectral representation of divergence-free periodic fields.

Fields live on the box [0, 2*pi)^3. A SpectralField stores, for every wave
vector in the lexicographic half-space, the amplitudes (c+, c-) on the helical
basis h+-(k); the real field is

    B(x) = sum_k (c+ h+(k) + c- h-(k)) exp(i k.x) + complex conjugate.

Grid arrays are indexed [component, ix, iy, iz] with x_j = 2*pi*j/N.
"""
import logging
import weakref
from dataclasses import dataclass, field as dataclass_field

import numpy as np
from scipy import ndimage

from .exceptions import AliasingError, RejectedInputError

logger = logging.getLogger(__name__)

BOX_LENGTH = 2.0 * np.pi
VOLUME = BOX_LENGTH ** 3
EXACT_MODE_LIMIT = 512
INTERPOLATION_TOLERANCE = 1e-3
MAX_INTERPOLATION_N = 192

_SQRT2 = np.sqrt(2.0)
_POINT_CHUNK = 4096
_EVALUATORS = weakref.WeakKeyDictionary()


def in_half_space(wavevectors):
    """True for wave vectors stored explicitly (their negatives are implied)"""
    k = np.atleast_2d(wavevectors)
    n1, n2, n3 = k[:, 0], k[:, 1], k[:, 2]
    return (n3 > 0) | ((n3 == 0) & (n2 > 0)) | ((n3 == 0) & (n2 == 0) & (n1 > 0))


@dataclass(frozen=True)
class HelicalBasis:
    hplus: np.ndarray
    hminus: np.ndarray


def helical_basis_arrays(wavevectors):
    """Vectorised helical basis for an (M, 3) array of nonzero wave vectors"""
    k = np.atleast_2d(np.asarray(wavevectors, dtype=float))
    kmag = np.linalg.norm(k, axis=1)
    if np.any(kmag == 0.0):
        raise RejectedInputError('zero wave vector has no helical basis')
    khat = k / kmag[:, None]

    u = np.cross(khat, np.array([0.0, 0.0, 1.0]))
    unorm = np.linalg.norm(u, axis=1)
    along_z = unorm < 1e-12
    u[along_z] = np.array([1.0, 0.0, 0.0])
    u[~along_z] /= unorm[~along_z, None]
    v = np.cross(khat, u)

    hplus = (u + 1j * v) / _SQRT2
    hminus = (u - 1j * v) / _SQRT2
    return hplus, hminus


def helical_basis(k):
    """Helical polarisation vectors h+- for one wave vector"""
    hplus, hminus = helical_basis_arrays(np.asarray(k).reshape(1, 3))
    return HelicalBasis(hplus=hplus[0], hminus=hminus[0])


@dataclass(frozen=True)
class Ball:
    """Compact support descriptor: ball inside the periodic box"""
    center: tuple
    radius: float

    @classmethod
    def inscribed(cls, box_length=BOX_LENGTH):
        half = box_length / 2.0
        return cls(center=(half, half, half), radius=half)

    @property
    def volume(self):
        return 4.0 / 3.0 * np.pi * self.radius ** 3

    def contains(self, points):
        d = np.atleast_2d(points) - np.asarray(self.center)
        return np.linalg.norm(d, axis=1) <= self.radius

    def sample(self, n, rng):
        """Uniform points in the ball"""
        direction = rng.normal(size=(n, 3))
        direction /= np.linalg.norm(direction, axis=1)[:, None]
        radius = self.radius * rng.random(n) ** (1.0 / 3.0)
        return np.asarray(self.center) + direction * radius[:, None]


@dataclass(frozen=True, eq=False)
class SpectralField:
    wavevectors: np.ndarray
    cplus: np.ndarray
    cminus: np.ndarray
    box_length: float = BOX_LENGTH
    compressive_norm: float = 0.0
    mean_norm: float = 0.0

    def __post_init__(self):
        k = np.array(self.wavevectors, dtype=np.int64).reshape(-1, 3)
        cp = np.array(self.cplus, dtype=complex).reshape(-1)
        cm = np.array(self.cminus, dtype=complex).reshape(-1)
        if not (len(k) == len(cp) == len(cm)):
            raise RejectedInputError('wave vectors and amplitudes differ in length')
        if len(k) and not np.all(in_half_space(k)):
            raise RejectedInputError('wave vectors must lie in the stored half-space')
        for array in (k, cp, cm):
            array.setflags(write=False)
        object.__setattr__(self, 'wavevectors', k)
        object.__setattr__(self, 'cplus', cp)
        object.__setattr__(self, 'cminus', cm)

    @classmethod
    def zeros(cls):
        return cls(np.zeros((0, 3), dtype=np.int64), np.zeros(0), np.zeros(0))

    @classmethod
    def from_vectors(cls, wavevectors, vectors):
        """Build from Fourier coefficient vectors at arbitrary nonzero wave vectors.

        Vectors outside the half-space are folded onto it by conjugation,
        repeated wave vectors are summed and the compressive part b.k/|k| is
        dropped; its RMS amplitude is kept as compressive_norm.
        """
        k = np.array(wavevectors, dtype=np.int64).reshape(-1, 3)
        b = np.array(vectors, dtype=complex).reshape(-1, 3)
        if len(k) == 0:
            return cls.zeros()
        if np.any(np.all(k == 0, axis=1)):
            raise RejectedInputError('the mean (k = 0) component cannot be stored')

        flip = ~in_half_space(k)
        k[flip] *= -1
        b[flip] = np.conj(b[flip])
        k, inverse = np.unique(k, axis=0, return_inverse=True)
        merged = np.zeros((len(k), 3), dtype=complex)
        np.add.at(merged, inverse.reshape(-1), b)

        hplus, hminus = helical_basis_arrays(k)
        cp = np.sum(merged * np.conj(hplus), axis=1)
        cm = np.sum(merged * np.conj(hminus), axis=1)
        khat = k / np.linalg.norm(k, axis=1)[:, None]
        compressive = np.sum(merged * khat, axis=1)
        return cls(k, cp, cm, compressive_norm=float(np.sqrt(2.0 * np.sum(np.abs(compressive) ** 2))))

    @property
    def mode_count(self):
        return len(self.wavevectors)

    @property
    def full_mode_count(self):
        """Number of populated wave vectors once the conjugate half is included"""
        return 2 * self.mode_count

    @property
    def kmag(self):
        return np.linalg.norm(self.wavevectors, axis=1)

    @property
    def kmax(self):
        if self.mode_count == 0:
            return 0
        return int(np.max(np.abs(self.wavevectors)))

    def coefficient_vectors(self):
        """Fourier coefficient vectors b_k = c+ h+ + c- h- at the stored wave vectors"""
        if self.mode_count == 0:
            return np.zeros((0, 3), dtype=complex)
        hplus, hminus = helical_basis_arrays(self.wavevectors)
        return self.cplus[:, None] * hplus + self.cminus[:, None] * hminus

    def amplitudes(self, k):
        """(c+, c-) stored at wave vector k, zero if absent"""
        match = np.all(self.wavevectors == np.asarray(k, dtype=np.int64), axis=1)
        if not np.any(match):
            return 0j, 0j
        index = int(np.argmax(match))
        return complex(self.cplus[index]), complex(self.cminus[index])

    def with_amplitudes(self, cplus, cminus):
        return SpectralField(self.wavevectors, cplus, cminus, self.box_length)


@dataclass(frozen=True, eq=False)
class GridField:
    data: np.ndarray
    support: Ball = None
    box_length: float = BOX_LENGTH
    diagnostics: dict = dataclass_field(default_factory=dict)

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.ndim != 4 or data.shape[0] != 3 or len(set(data.shape[1:])) != 1:
            raise RejectedInputError('grid data must have shape (3, N, N, N)')
        data.setflags(write=False)
        object.__setattr__(self, 'data', data)

    @property
    def N(self):
        return self.data.shape[1]

    @property
    def spacing(self):
        return self.box_length / self.N

    @property
    def max_norm(self):
        return float(np.max(np.linalg.norm(self.data, axis=0)))

    def positions(self):
        axis = np.arange(self.N) * self.spacing
        return np.meshgrid(axis, axis, axis, indexing='ij')


def wavenumber_grid(N):
    """Integer wave numbers of an N^3 FFT grid, each shaped (N, N, N)"""
    n = np.rint(np.fft.fftfreq(N, d=1.0 / N)).astype(np.int64)
    return np.meshgrid(n, n, n, indexing='ij')


def minimum_grid_size(f):
    return 2 * f.kmax + 2


def quadrature_grid_size(f, degree):
    """Smallest even N that integrates products of `degree` copies of f exactly"""
    n = degree * f.kmax + 2
    return n + (n % 2)


def to_fourier(f, N):
    """Coefficient array F[c, i, j, l] with B = sum F exp(i k.x), no aliasing allowed"""
    if N < minimum_grid_size(f):
        raise AliasingError(
            f'grid N={N} aliases wave numbers up to {f.kmax}; need N >= {minimum_grid_size(f)}',
            required_n=minimum_grid_size(f),
        )
    coeffs = np.zeros((3, N, N, N), dtype=complex)
    if f.mode_count == 0:
        return coeffs
    b = f.coefficient_vectors()
    idx = tuple((f.wavevectors % N).T)
    neg = tuple(((-f.wavevectors) % N).T)
    for c in range(3):
        coeffs[c][idx] = b[:, c]
        coeffs[c][neg] = np.conj(b[:, c])
    return coeffs


def fourier_to_grid(coeffs):
    N = coeffs.shape[1]
    return np.real(np.fft.ifftn(coeffs, axes=(1, 2, 3))) * N ** 3


def grid_to_fourier(data):
    N = data.shape[1]
    return np.fft.fftn(data, axes=(1, 2, 3)) / N ** 3


def synthesize(f, N, support=None):
    """Real samples of f on an N^3 grid"""
    return GridField(fourier_to_grid(to_fourier(f, N)), support=support, box_length=f.box_length)


def analyze(g, tol=1e-13):
    """Helical amplitudes of a grid field; the mean and compressive parts are discarded"""
    N = g.N
    coeffs = grid_to_fourier(g.data)
    n1, n2, n3 = wavenumber_grid(N)
    k = np.stack([n1.ravel(), n2.ravel(), n3.ravel()], axis=1)
    keep = in_half_space(k) & (np.max(np.abs(k), axis=1) < N / 2)
    b = coeffs.reshape(3, -1)[:, keep].T

    f = SpectralField.from_vectors(k[keep], b)
    power = np.abs(f.cplus) ** 2 + np.abs(f.cminus) ** 2
    significant = power > (tol ** 2) * max(float(np.max(power, initial=0.0)), 1e-300)
    mean_norm = float(np.linalg.norm(coeffs[:, 0, 0, 0]))
    result = SpectralField(
        f.wavevectors[significant], f.cplus[significant], f.cminus[significant],
        box_length=g.box_length, compressive_norm=f.compressive_norm, mean_norm=mean_norm,
    )

    rms = float(np.sqrt(np.mean(np.sum(g.data ** 2, axis=0)))) if g.data.size else 0.0
    if mean_norm > 1e-12 * max(rms, 1e-300):
        logger.warning('analyze: discarded mean component of norm %.3e', mean_norm)
    if result.compressive_norm > 1e-8 * max(rms, 1e-300):
        logger.warning('analyze: discarded compressive component of norm %.3e (rms field %.3e)',
                       result.compressive_norm, rms)
    return result


def divergence_norm(g):
    """Max-norm of the spectral divergence of a grid field"""
    coeffs = grid_to_fourier(g.data)
    n1, n2, n3 = wavenumber_grid(g.N)
    scale = 2.0 * np.pi / g.box_length
    div_hat = 1j * scale * (n1 * coeffs[0] + n2 * coeffs[1] + n3 * coeffs[2])
    div = np.real(np.fft.ifftn(div_hat)) * g.N ** 3
    return float(np.max(np.abs(div)))


def curl(f):
    kmag = f.kmag
    return f.with_amplitudes(f.cplus * kmag, -f.cminus * kmag)


def vector_potential(f):
    """Zero-mean Coulomb-gauge potential A with curl A = f"""
    kmag = f.kmag
    return f.with_amplitudes(f.cplus / kmag, -f.cminus / kmag)


def energy(f):
    return 2.0 * VOLUME * float(np.sum(np.abs(f.cplus) ** 2 + np.abs(f.cminus) ** 2))


def helicity(f):
    return 2.0 * VOLUME * float(np.sum((np.abs(f.cplus) ** 2 - np.abs(f.cminus) ** 2) / f.kmag))


def current_helicity(f):
    return 2.0 * VOLUME * float(np.sum(f.kmag * (np.abs(f.cplus) ** 2 - np.abs(f.cminus) ** 2)))


def mirror(f):
    """Parity image B'(x) = -B(-x); swaps the two helicities"""
    return f.with_amplitudes(-np.conj(f.cminus), -np.conj(f.cplus))


def rotate(f, rotation):
    """Exact lattice rotation B'(x) = R B(R^-1 x) for a signed permutation R with det +1"""
    R = np.asarray(rotation)
    if R.shape != (3, 3) or not np.all(np.isin(R, (-1, 0, 1))) \
            or not np.all(np.abs(R).sum(axis=0) == 1) or round(np.linalg.det(R)) != 1:
        raise RejectedInputError('rotation must be a signed permutation matrix with det +1')
    if f.mode_count == 0:
        return f
    rotated = SpectralField.from_vectors(f.wavevectors @ R.T, f.coefficient_vectors() @ R.T)
    return SpectralField(rotated.wavevectors, rotated.cplus, rotated.cminus, f.box_length)


def is_beltrami(f, tol=1e-12):
    """Common curl eigenvalue if f is a Beltrami field, otherwise None"""
    scale = max(float(np.max(np.abs(f.cplus), initial=0.0)),
                float(np.max(np.abs(f.cminus), initial=0.0)), 1e-300)
    kmag = f.kmag
    values = np.concatenate([kmag[np.abs(f.cplus) > tol * scale],
                             -kmag[np.abs(f.cminus) > tol * scale]])
    if len(values) == 0 or np.ptp(values) > 1e-12 * np.max(np.abs(values)):
        return None
    return float(values[0])


class SpectralEvaluator:
    """Exact truncated Fourier sums for B, A and the gradient of B"""

    def __init__(self, f):
        self.k = f.wavevectors.astype(float) * (2.0 * np.pi / f.box_length)
        self.b = f.coefficient_vectors()
        self.a = vector_potential(f).coefficient_vectors()
        self.support = None
        self.volume = f.box_length ** 3

    def _sum(self, points, vectors):
        pts = np.atleast_2d(points)
        out = np.empty((len(pts), vectors.shape[1]))
        for start in range(0, len(pts), _POINT_CHUNK):
            phases = np.exp(1j * (pts[start:start + _POINT_CHUNK] @ self.k.T))
            out[start:start + _POINT_CHUNK] = 2.0 * np.real(phases @ vectors)
        return out

    def evaluate(self, points):
        return self._reshape(points, self._sum(points, self.b))

    def potential(self, points):
        return self._reshape(points, self._sum(points, self.a))

    def field_and_potential(self, points):
        both = self._sum(points, np.concatenate([self.b, self.a], axis=1))
        return self._reshape(points, both[:, :3]), self._reshape(points, both[:, 3:])

    def jacobian(self, points):
        """d B_i / d x_j at each point, shape (P, 3, 3)"""
        grad = (1j * self.b[:, :, None] * self.k[:, None, :]).reshape(-1, 9)
        values = self._sum(points, grad).reshape(-1, 3, 3)
        return values[0] if np.ndim(points) == 1 else values

    @staticmethod
    def _reshape(points, values):
        return values[0] if np.ndim(points) == 1 else values


class GridInterpolant:
    """Periodic tricubic (B-spline) interpolation of a 3-component grid array"""

    def __init__(self, data, box_length=BOX_LENGTH, order=3):
        self.order = order
        self.N = data.shape[1]
        self.spacing = box_length / self.N
        self.coefficients = [
            ndimage.spline_filter(component, order=order, mode='grid-wrap') for component in data
        ]

    def __call__(self, points):
        pts = np.atleast_2d(points)
        coords = (pts / self.spacing).T
        values = np.stack([
            ndimage.map_coordinates(c, coords, order=self.order, mode='grid-wrap', prefilter=False)
            for c in self.coefficients
        ], axis=1)
        return values[0] if np.ndim(points) == 1 else values


class GridEvaluator:
    """B and its potential interpolated from periodic grids"""

    def __init__(self, b_data, a_data, box_length=BOX_LENGTH, support=None, order=3):
        self.field_interpolant = GridInterpolant(b_data, box_length, order)
        self.potential_interpolant = GridInterpolant(a_data, box_length, order)
        self.support = support
        self.volume = support.volume if support is not None else box_length ** 3

    def evaluate(self, points):
        return self.field_interpolant(points)

    def potential(self, points):
        return self.potential_interpolant(points)

    def field_and_potential(self, points):
        return self.evaluate(points), self.potential(points)


def biot_savart_potential(g, margin=8):
    """Free-space potential A = curl (G * B), G = 1/(4 pi r), of a ball-supported grid field.

    The convolution runs on a window of side S around the support, zero-padded
    to 2S, with the kernel cut off at |r| = S. Every pair of points inside the
    support plus `margin` cells then sees the unmodified free-space kernel and
    no periodic image. A is zero outside the window.
    """
    if g.support is None:
        raise RejectedInputError('the Biot-Savart potential needs a ball-supported field')
    N, h = g.N, g.spacing
    half = int(np.ceil(g.support.radius / h)) + margin
    M = 2 * half + 1
    if M >= N:
        start, M = np.zeros(3, dtype=int), N
    else:
        start = np.rint(np.asarray(g.support.center) / h).astype(int) - half
    index = np.ix_(range(3), *[(s + np.arange(M)) % N for s in start])

    padded = np.zeros((3, 2 * M, 2 * M, 2 * M))
    padded[:, :M, :M, :M] = g.data[index]
    b_hat = np.fft.rfftn(padded, axes=(1, 2, 3))
    del padded
    k_full = 2.0 * np.pi * np.fft.fftfreq(2 * M, d=h)
    k_half = 2.0 * np.pi * np.fft.rfftfreq(2 * M, d=h)
    kx, ky, kz = np.meshgrid(k_full, k_full, k_half, indexing='ij', sparse=True)
    k2 = kx ** 2 + ky ** 2 + kz ** 2
    S = M * h
    with np.errstate(divide='ignore', invalid='ignore'):
        kernel = np.where(k2 > 0, (1.0 - np.cos(np.sqrt(k2) * S)) / k2, S ** 2 / 2.0)
    bx, by, bz = b_hat
    window = np.empty((3, M, M, M))
    for c, a_hat in enumerate(((ky * bz - kz * by), (kz * bx - kx * bz), (kx * by - ky * bx))):
        window[c] = np.fft.irfftn(1j * a_hat * kernel, s=(2 * M,) * 3)[:M, :M, :M]
    A = np.zeros_like(g.data)
    A[index] = window
    logger.debug('biot_savart_potential: N=%d, window %d^3 padded to %d^3', N, M, 2 * M)
    return A


def grid_potential(g):
    """Biot-Savart potential for ball-supported grids, Coulomb gauge for periodic ones"""
    if g.support is not None:
        return biot_savart_potential(g)
    return synthesize(vector_potential(analyze(g)), g.N).data


def _spline_transfer(omega, order, terms=6):
    """Weights of exp(i (omega + 2 pi m) x), |m| <= terms, in the order-`order` spline
    interpolant of exp(i omega x) sampled at unit spacing"""
    m = np.arange(-terms, terms + 1)
    s = np.sinc((omega[..., None] + 2.0 * np.pi * m) / (2.0 * np.pi)) ** (order + 1)
    return s / np.sum(s, axis=-1, keepdims=True), m


def interpolation_error(f, N, order=3):
    """Predicted relative rms error of B interpolated by order-`order` splines from an N^3 grid"""
    if f.mode_count == 0:
        return 0.0
    H, m = _spline_transfer(f.wavevectors * (2.0 * np.pi / N), order)
    kept = np.prod(H[..., m == 0][..., 0], axis=1)
    spread = np.prod(np.sum(H ** 2, axis=-1), axis=1)
    per_mode = np.maximum(1.0 - 2.0 * kept + spread, 0.0)
    power = np.abs(f.cplus) ** 2 + np.abs(f.cminus) ** 2
    return float(np.sqrt(np.sum(power * per_mode) / np.sum(power)))


def interpolation_grid_size(f, tolerance=INTERPOLATION_TOLERANCE, order=3, limit=MAX_INTERPOLATION_N):
    """Smallest even N >= 4 kmax whose predicted interpolation error is within tolerance"""
    N = max(4 * f.kmax, minimum_grid_size(f))
    N += N % 2
    while interpolation_error(f, N, order) > tolerance:
        if N >= limit:
            logger.warning('evaluator: N=%d leaves a predicted interpolation error of %.2e > %.2e',
                           N, interpolation_error(f, N, order), tolerance)
            break
        N = min(limit, N + max(2, 2 * (N // 16)))
    return N


def make_evaluator(source, exact_limit=EXACT_MODE_LIMIT, order=3, tolerance=INTERPOLATION_TOLERANCE):
    """Point evaluator for a SpectralField, GridField or analytic field.

    Spectral fields above `exact_limit` modes are interpolated from a grid
    chosen so the predicted relative rms error stays within `tolerance`.
    Ball-supported grids carry their Biot-Savart potential.
    """
    if isinstance(source, SpectralField):
        if source.mode_count <= exact_limit:
            return SpectralEvaluator(source)
        N = interpolation_grid_size(source, tolerance, order)
        logger.debug('evaluator: %d modes, interpolating on N=%d (predicted error %.2e)',
                     source.mode_count, N, interpolation_error(source, N, order))
        return GridEvaluator(synthesize(source, N).data,
                             synthesize(vector_potential(source), N).data,
                             source.box_length, order=order)
    if isinstance(source, GridField):
        return GridEvaluator(source.data, grid_potential(source), source.box_length,
                             support=source.support, order=order)
    if hasattr(source, 'evaluate') and hasattr(source, 'potential'):
        return source
    raise RejectedInputError(f'cannot evaluate field of type {type(source).__name__}')


def cached_evaluator(source, exact_limit=EXACT_MODE_LIMIT):
    """make_evaluator, built once per field object and limit"""
    if not isinstance(source, (SpectralField, GridField)):
        return make_evaluator(source, exact_limit)
    per_source = _EVALUATORS.setdefault(source, {})
    if exact_limit not in per_source:
        per_source[exact_limit] = make_evaluator(source, exact_limit)
    return per_source[exact_limit]


def evaluate_point(f, x, exact_limit=EXACT_MODE_LIMIT, with_potential=False):
    """B at one or more positions; (B, A) with with_potential=True"""
    evaluator = cached_evaluator(f, exact_limit)
    points = np.asarray(x, dtype=float)
    if with_potential:
        return evaluator.field_and_potential(points)
    return evaluator.evaluate(points)


def jacobian_point(f, x):
    """Exact gradient d B_i / d x_j of a spectral field at one or more positions"""
    return SpectralEvaluator(f).jacobian(np.asarray(x, dtype=float))


def field_and_potential_grids(f, N=None, degree=2):
    """Synthesised B and A on a common grid fine enough for degree-`degree` quadrature"""
    if N is None:
        N = quadrature_grid_size(f, degree)
    return synthesize(f, N).data, synthesize(vector_potential(f), N).data


def grid_quadrature(values, box_length=BOX_LENGTH):
    """Integral over the box of a sampled scalar"""
    return float(np.mean(values)) * box_length ** 3
