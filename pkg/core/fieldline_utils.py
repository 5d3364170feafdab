"""
Magnetic field lines: adaptive integration of dx/dtau = B(x) with running
helicity-density integrals, Gauss linking of line pairs and the Stokes
gauge check of the line integral of A.

The integrated state per seed is (x, int h dtau, int h^2 dtau) with
h = (A(x), B(x)), so Lambda_A and its Cauchy-Schwarz bound come out of the
same dense output as the trajectory.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.spatial import ConvexHull

from .exceptions import IntegrationError, RejectedInputError
from .spectral_utils import BOX_LENGTH, EXACT_MODE_LIMIT, cached_evaluator, evaluate_point

logger = logging.getLogger(__name__)

DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-11
BATCH_SIZE = 16
_STATE = 5


@dataclass(frozen=True, eq=False)
class FieldLine:
    seed: np.ndarray
    tau: np.ndarray
    positions: np.ndarray
    running_lambda_a: np.ndarray
    T: float
    rtol: float
    atol: float
    status: str = 'complete'
    message: str = ''
    closure_gap: float = None
    solution: object = None
    index: int = 0

    @property
    def is_complete(self):
        return self.status == 'complete'

    @property
    def wrapped_positions(self):
        return np.mod(self.positions, BOX_LENGTH)

    def state(self, tau):
        """Dense-output state rows (x, y, z, int h, int h^2) at the given times"""
        t = np.atleast_1d(np.asarray(tau, dtype=float))
        if np.any(t < 0) or np.any(t > self.T * (1 + 1e-12)):
            raise RejectedInputError(f'time outside the traced interval [0, {self.T}]')
        rows = self.solution(t)[_STATE * self.index:_STATE * (self.index + 1)].T
        return rows

    def position_at(self, tau):
        rows = self.state(tau)[:, :3]
        return rows[0] if np.ndim(tau) == 0 else rows

    def integrals(self, T):
        """(int_0^T h dtau, int_0^T h^2 dtau)"""
        row = self.state(T)[0]
        return float(row[3]), float(row[4])


def _integrate(field, seeds, T, rtol, atol, exact_limit=EXACT_MODE_LIMIT, events=None):
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    m = len(seeds)

    def rhs(t, y):
        state = y.reshape(m, _STATE)
        B, A = evaluate_point(field, state[:, :3], exact_limit, with_potential=True)
        h = np.sum(A * B, axis=1)
        return np.column_stack([B, h, h * h]).ravel()

    y0 = np.column_stack([seeds, np.zeros((m, 2))]).ravel()
    return integrate.solve_ivp(rhs, (0.0, T), y0, method='DOP853', rtol=rtol, atol=atol,
                               dense_output=True, events=events)


def _lines_from_result(evaluator, seeds, result, T, rtol, atol):
    seeds = np.atleast_2d(seeds)
    B0, A0 = evaluator.field_and_potential(seeds)
    h0 = np.sum(A0 * B0, axis=1)
    status = 'complete' if result.status >= 0 else 'partial'
    t_end = float(result.t[-1])
    lines = []
    for i, x0 in enumerate(seeds):
        rows = result.y[_STATE * i:_STATE * (i + 1)].T
        with np.errstate(divide='ignore', invalid='ignore'):
            running = np.where(result.t > 0, rows[:, 3] / result.t, h0[i])
        lines.append(FieldLine(
            seed=np.array(x0), tau=np.array(result.t), positions=rows[:, :3].copy(),
            running_lambda_a=running, T=t_end if status == 'partial' else float(T),
            rtol=rtol, atol=atol, status=status,
            message='' if status == 'complete' else result.message,
            solution=result.sol, index=i,
        ))
    return lines


def trace_line(field, x0, T, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, exact_limit=EXACT_MODE_LIMIT):
    """Trace one field line to time T; a failed integration returns the partial line"""
    if T <= 0:
        raise RejectedInputError('integration time T must be positive')
    evaluator = cached_evaluator(field, exact_limit)
    seed = np.asarray(x0, dtype=float).reshape(1, 3)
    result = _integrate(field, seed, T, rtol, atol, exact_limit)
    line = _lines_from_result(evaluator, seed, result, T, rtol, atol)[0]
    if not line.is_complete:
        logger.warning('trace_line: integration stopped at tau=%.6g of %.6g (%s)',
                       line.T, T, line.message)
    return line


def trace_lines(field, seeds, T, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, batch_size=BATCH_SIZE,
                threads=1, exact_limit=EXACT_MODE_LIMIT):
    """Trace many seeds in fixed-size batches; batch layout does not depend on `threads`"""
    if T <= 0:
        raise RejectedInputError('integration time T must be positive')
    evaluator = cached_evaluator(field, exact_limit)
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    batches = [seeds[i:i + batch_size] for i in range(0, len(seeds), batch_size)]

    def run(batch):
        result = _integrate(field, batch, T, rtol, atol, exact_limit)
        if result.status >= 0:
            return _lines_from_result(evaluator, batch, result, T, rtol, atol)
        # one stiff seed stops the whole batch; retrace seed by seed
        lines = []
        for x0 in batch:
            single = x0.reshape(1, 3)
            retraced = _integrate(field, single, T, rtol, atol, exact_limit)
            line = _lines_from_result(evaluator, single, retraced, T, rtol, atol)[0]
            if not line.is_complete:
                logger.warning('trace_lines: seed %s stopped at tau=%.6g of %.6g (%s)',
                               x0.tolist(), line.T, T, line.message)
            lines.append(line)
        return lines

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            traced = list(pool.map(run, batches))
    else:
        traced = [run(batch) for batch in batches]
    logger.debug('traced %d lines to T=%g in %d batches', len(seeds), T, len(batches))
    return [line for batch in traced for line in batch]


def trace_closed_line(field, x0, t_max, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL,
                      closure_radius=1e-4, exact_limit=EXACT_MODE_LIMIT):
    """Trace until the first return through the plane normal to B(x0) within closure_radius"""
    evaluator = cached_evaluator(field, exact_limit)
    x0 = np.asarray(x0, dtype=float)
    b0 = np.asarray(evaluator.evaluate(x0.reshape(1, 3))[0])
    if np.linalg.norm(b0) == 0.0:
        raise RejectedInputError('seed lies where B = 0; no line through it')
    bhat = b0 / np.linalg.norm(b0)

    def crossing(t, y):
        return float(np.dot(y[:3] - x0, bhat))
    crossing.direction = 1.0

    result = _integrate(field, x0.reshape(1, 3), t_max, rtol, atol, exact_limit,
                        events=[crossing])
    period, gap = None, None
    for t_event, y_event in zip(result.t_events[0], result.y_events[0]):
        distance = float(np.linalg.norm(y_event[:3] - x0))
        if t_event > 1e-9 * t_max and distance < closure_radius:
            period, gap = float(t_event), distance
            break
    line = _lines_from_result(evaluator, x0.reshape(1, 3), result, t_max, rtol, atol)[0]
    if period is None:
        raise IntegrationError(f'line from {x0.tolist()} did not close before t={t_max}',
                               partial_line=line)

    keep = line.tau < period
    end = line.solution(period)[:_STATE]
    tau = np.append(line.tau[keep], period)
    positions = np.vstack([line.positions[keep], end[:3]])
    running = np.append(line.running_lambda_a[keep], end[3] / period)
    return FieldLine(seed=x0, tau=tau, positions=positions, running_lambda_a=running, T=period,
                     rtol=rtol, atol=atol, closure_gap=gap, solution=line.solution, index=0)


def lambda_A(line, T=None):
    """Time average (1/T) int_0^T (A, B) dtau along the line"""
    T = line.T if T is None else T
    if T <= 0:
        raise RejectedInputError('averaging time T must be positive')
    return line.integrals(T)[0] / T


def lambda_sq(line, T=None):
    return lambda_A(line, T) ** 2


def mean_square_density(line, T=None):
    """(1/T) int_0^T (A, B)^2 dtau, the Cauchy-Schwarz bound of lambda_sq"""
    T = line.T if T is None else T
    return line.integrals(T)[1] / T


def windowed_variance(line, T, n=256):
    """Variance of the running mean Lambda_A(tau) over tau in [T, 2T]"""
    if 2 * T > line.T * (1 + 1e-12):
        raise RejectedInputError(f'windowed variance needs a line traced to 2T = {2 * T}')
    tau = np.linspace(T, 2 * T, n)
    running = line.state(tau)[:, 3] / tau
    return float(np.var(running))


def _refined_pairs(m1, d1, m2, d2, refine):
    s = (np.arange(refine) + 0.5) / refine - 0.5
    sub1 = m1[:, None, :] + s[None, :, None] * d1[:, None, :]
    sub2 = m2[:, None, :] + s[None, :, None] * d2[:, None, :]
    r = sub1[:, :, None, :] - sub2[:, None, :, :]
    dist = np.linalg.norm(r, axis=3)
    if np.any(dist == 0.0):
        raise RejectedInputError('lines intersect; linking is undefined')
    cross = np.cross(d1, d2)[:, None, None, :] / refine ** 2
    return np.sum(np.sum(r * cross, axis=3) / dist ** 3, axis=(1, 2))


def polyline_gauss_integral(P1, P2, refine=8, chunk=256):
    """(1/4 pi) sum over segment pairs of (m1 - m2).(d1 x d2)/|m1 - m2|^3.

    Segment pairs closer than three segment lengths are subdivided `refine`
    times each. Closed polylines give their linking number.
    """
    P1 = np.asarray(P1, dtype=float)
    P2 = np.asarray(P2, dtype=float)
    d1, d2 = np.diff(P1, axis=0), np.diff(P2, axis=0)
    m1, m2 = 0.5 * (P1[1:] + P1[:-1]), 0.5 * (P2[1:] + P2[:-1])
    l1, l2 = np.linalg.norm(d1, axis=1), np.linalg.norm(d2, axis=1)

    total = 0.0
    for start in range(0, len(d1), chunk):
        rows = slice(start, start + chunk)
        r = m1[rows, None, :] - m2[None, :, :]
        dist = np.linalg.norm(r, axis=2)
        if np.any(dist == 0.0):
            raise RejectedInputError('lines intersect; linking is undefined')
        kernel = np.sum(r * np.cross(d1[rows, None, :], d2[None, :, :]), axis=2) / dist ** 3
        near = np.nonzero(dist < 3.0 * np.maximum(l1[rows, None], l2[None, :]))
        if len(near[0]):
            i, j = near[0] + start, near[1]
            kernel[near] = _refined_pairs(m1[i], d1[i], m2[j], d2[j], refine)
        total += float(np.sum(kernel))
    return total / (4.0 * np.pi)


def gauss_linking(line1, line2, T=None, n_samples=2048):
    """Gauss double integral (1/4 pi) over [0,T]x[0,T]; each line's own span when T is None"""
    if np.linalg.norm(np.asarray(line1.seed) - np.asarray(line2.seed)) < 1e-12:
        raise RejectedInputError('coincident seed points')
    T1 = line1.T if T is None else T
    T2 = line2.T if T is None else T
    P1 = line1.position_at(np.linspace(0.0, T1, n_samples + 1))
    P2 = line2.position_at(np.linspace(0.0, T2, n_samples + 1))
    return polyline_gauss_integral(P1, P2)


def asymptotic_linking(line1, line2, T=None, n_samples=2048):
    """Gauss integral normalised by T^2 (by T1*T2 over each line's own span)"""
    T1 = line1.T if T is None else T
    T2 = line2.T if T is None else T
    return gauss_linking(line1, line2, T, n_samples) / (T1 * T2)


@dataclass(frozen=True)
class StokesCheck:
    eps: float
    difference: float
    flux: float


@dataclass(frozen=True)
class EndpointCheck:
    difference: float
    predicted: float


def _jacobian(evaluator, points, step=1e-6):
    if hasattr(evaluator, 'jacobian'):
        return evaluator.jacobian(points)
    columns = []
    for j in range(3):
        offset = np.zeros(3)
        offset[j] = step
        columns.append((evaluator.evaluate(points + offset) - evaluator.evaluate(points - offset))
                       / (2 * step))
    return np.stack(columns, axis=2)


def _line_samples(evaluator, line, T, n):
    if n % 2:
        n += 1
    t = np.linspace(0.0, T, n + 1)
    x = line.position_at(t)
    return t, x, evaluator.evaluate(x)


def stokes_gauge_check(field, line, eps, T=None, n=4096, exact_limit=EXACT_MODE_LIMIT):
    """Compare int (A, dg) along g = x + eps sin(pi t/T) n(t) with int (A, dx) along the line.

    n(t) is the unit normal B x e for the coordinate axis e that stays
    furthest from B. Returns the signed difference and the flux of B
    through the strip between the two curves.
    """
    evaluator = cached_evaluator(field, exact_limit)
    T = line.T if T is None else T
    t, x, B = _line_samples(evaluator, line, T, n)
    Bdot = np.einsum('nij,nj->ni', _jacobian(evaluator, x), B)

    axes = np.eye(3)
    spread = [np.min(np.linalg.norm(np.cross(B, e), axis=1)) for e in axes]
    e = axes[int(np.argmax(spread))]
    w = np.cross(B, e)
    wnorm = np.linalg.norm(w, axis=1)
    if np.min(wnorm) == 0.0:
        raise RejectedInputError('no transverse direction along the line (B vanishes)')
    normal = w / wnorm[:, None]
    wdot = np.cross(Bdot, e)
    ndot = (wdot - normal * np.sum(normal * wdot, axis=1)[:, None]) / wnorm[:, None]

    s = np.sin(np.pi * t / T)[:, None]
    sdot = (np.pi / T) * np.cos(np.pi * t / T)[:, None]
    transverse = sdot * normal + s * ndot

    g = x + eps * s * normal
    along_g = np.sum(evaluator.potential(g) * (B + eps * transverse), axis=1)
    along_x = np.sum(evaluator.potential(x) * B, axis=1)
    difference = integrate.simpson(along_g, x=t) - integrate.simpson(along_x, x=t)

    nodes, weights = np.polynomial.legendre.leggauss(6)
    flux_density = np.zeros_like(t)
    for node, weight in zip(nodes, weights):
        sigma = 0.5 * eps * (node + 1.0)
        surface = x + sigma * s * normal
        area = np.cross(s * normal, B + sigma * transverse)
        flux_density += 0.5 * eps * weight * np.sum(evaluator.evaluate(surface) * area, axis=1)
    flux = integrate.simpson(flux_density, x=t)
    return StokesCheck(eps=eps, difference=float(difference), flux=float(flux))


def endpoint_correction(field, line, shift, T=None, n=4096, exact_limit=EXACT_MODE_LIMIT):
    """Line-integral change for g = x + (t/T) l against its first-order value (A(x(T)), l)"""
    evaluator = cached_evaluator(field, exact_limit)
    T = line.T if T is None else T
    shift = np.asarray(shift, dtype=float)
    t, x, B = _line_samples(evaluator, line, T, n)
    g = x + (t / T)[:, None] * shift
    along_g = np.sum(evaluator.potential(g) * (B + shift / T), axis=1)
    along_x = np.sum(evaluator.potential(x) * B, axis=1)
    difference = integrate.simpson(along_g, x=t) - integrate.simpson(along_x, x=t)
    predicted = float(np.dot(evaluator.potential(x[-1:])[0], shift))
    return EndpointCheck(difference=float(difference), predicted=predicted)


def flow_volume_ratio(field, center, T, radius=1e-4, n_points=1000, seed=0,
                      rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, threads=1):
    """Convex-hull volume of a small advected seed cloud at T over its initial volume"""
    rng = np.random.Generator(np.random.Philox(seed))
    direction = rng.normal(size=(n_points, 3))
    direction /= np.linalg.norm(direction, axis=1)[:, None]
    cloud = np.asarray(center) + radius * direction * rng.random(n_points)[:, None] ** (1 / 3)
    lines = trace_lines(field, cloud, T, rtol=rtol, atol=atol, threads=threads)
    advected = np.array([line.position_at(T) for line in lines])
    return ConvexHull(advected).volume / ConvexHull(cloud).volume
