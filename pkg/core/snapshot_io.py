"""
Snapshot and result files.

Spectral snapshots are CSV with '#' metadata lines; grid snapshots are a JSON
sidecar plus raw little-endian float64 component blocks with x fastest.
"""
import csv
import json
import logging
from pathlib import Path

import numpy as np

from .exceptions import SnapshotFormatError
from .spectral_utils import BOX_LENGTH, Ball, GridField, SpectralField

logger = logging.getLogger(__name__)

SPECTRAL_FORMAT = 'helical-v1'
GRID_FORMAT = 'grid-v1'
SPECTRAL_COLUMNS = ['n1', 'n2', 'n3', 're_cplus', 'im_cplus', 're_cminus', 'im_cminus']


def _num(x):
    return format(float(x), '.17g')


def write_spectral(path, field):
    path = Path(path)
    with path.open('w', newline='') as handle:
        handle.write(f'# format={SPECTRAL_FORMAT}\n')
        handle.write(f'# box={field.box_length!r}\n')
        handle.write('# storage=halfspace\n')
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(SPECTRAL_COLUMNS)
        for k, cp, cm in zip(field.wavevectors, field.cplus, field.cminus):
            writer.writerow([int(k[0]), int(k[1]), int(k[2]),
                             _num(cp.real), _num(cp.imag), _num(cm.real), _num(cm.imag)])
    return path


def read_spectral(path):
    path = Path(path)
    metadata, rows = {}, []
    try:
        with path.open() as handle:
            for line in handle:
                if line.startswith('#'):
                    key, _, value = line[1:].strip().partition('=')
                    metadata[key.strip()] = value.strip()
                elif line.strip():
                    rows.append(line)
    except OSError as exc:
        raise SnapshotFormatError(f'cannot read snapshot {path}: {exc}') from exc

    if metadata.get('format') != SPECTRAL_FORMAT:
        raise SnapshotFormatError(f'{path}: expected format={SPECTRAL_FORMAT}, got {metadata.get("format")!r}')
    if metadata.get('storage') != 'halfspace':
        raise SnapshotFormatError(f'{path}: only halfspace storage is supported')
    try:
        box = float(metadata.get('box', BOX_LENGTH))
        reader = csv.reader(rows)
        records = [r for r in reader if r and r[0] != 'n1']
        if any(len(r) != len(SPECTRAL_COLUMNS) for r in records):
            raise ValueError('rows must have 7 columns')
        k = np.array([[int(v) for v in r[:3]] for r in records], dtype=np.int64).reshape(-1, 3)
        values = np.array([[float(v) for v in r[3:]] for r in records]).reshape(-1, 4)
    except ValueError as exc:
        raise SnapshotFormatError(f'{path}: malformed spectral row ({exc})') from exc
    if abs(box - BOX_LENGTH) > 1e-12:
        raise SnapshotFormatError(f'{path}: box length {box} is not 2*pi')
    try:
        return SpectralField(k, values[:, 0] + 1j * values[:, 1], values[:, 2] + 1j * values[:, 3])
    except ValueError as exc:
        raise SnapshotFormatError(f'{path}: {exc}') from exc


def write_grid(path, grid):
    """Write <stem>.json and <stem>.bin; returns the sidecar path"""
    path = Path(path).with_suffix('.json')
    binary = path.with_suffix('.bin')
    support = None
    if grid.support is not None:
        support = {'center': [float(c) for c in grid.support.center], 'radius': float(grid.support.radius)}
    meta = {
        'format': GRID_FORMAT,
        'N': grid.N,
        'box': grid.box_length,
        'support': support,
        'components': ['x', 'y', 'z'],
        'layout': '(iz*N + iy)*N + ix',
        'dtype': '<f8',
        'data': binary.name,
        'diagnostics': {key: float(value) for key, value in sorted(grid.diagnostics.items())},
    }
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + '\n')
    np.ascontiguousarray(grid.data.transpose(0, 3, 2, 1), dtype='<f8').tofile(binary)
    return path


def read_grid(path):
    path = Path(path).with_suffix('.json')
    try:
        meta = json.loads(path.read_text())
        N = int(meta['N'])
        raw = np.fromfile(path.parent / meta.get('data', path.with_suffix('.bin').name), dtype='<f8')
    except (OSError, ValueError, KeyError) as exc:
        raise SnapshotFormatError(f'cannot read grid snapshot {path}: {exc}') from exc
    if meta.get('format') != GRID_FORMAT:
        raise SnapshotFormatError(f'{path}: expected format={GRID_FORMAT}')
    if raw.size != 3 * N ** 3:
        raise SnapshotFormatError(f'{path}: expected {3 * N ** 3} values, found {raw.size}')
    support = meta.get('support')
    ball = Ball(center=tuple(support['center']), radius=support['radius']) if support else None
    data = raw.reshape(3, N, N, N).transpose(0, 3, 2, 1)
    return GridField(data, support=ball, box_length=float(meta.get('box', BOX_LENGTH)),
                     diagnostics=dict(meta.get('diagnostics', {})))


def write_snapshot(path, field):
    if isinstance(field, SpectralField):
        return write_spectral(Path(path).with_suffix('.csv'), field)
    return write_grid(path, field)


def read_snapshot(path):
    """SpectralField from a .csv snapshot, GridField from a .json/.bin pair"""
    path = Path(path)
    if not path.exists() and not path.with_suffix('.json').exists():
        raise SnapshotFormatError(f'snapshot {path} does not exist')
    if path.suffix in ('.json', '.bin') or (path.suffix != '.csv' and path.with_suffix('.json').exists()):
        return read_grid(path)
    return read_spectral(path)


def write_rows(path, header, rows):
    path = Path(path)
    with path.open('w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([_num(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def write_report_csv(path, report):
    rows = [(name, est.value, est.stderr, est.systematic) for name, est in report.rows()]
    return write_rows(path, ['quantity', 'value', 'stderr', 'systematic'], rows)


def write_verdicts_csv(path, verdicts):
    rows = [(v.name, v.lhs, v.rhs, v.margin, v.status) for v in verdicts]
    return write_rows(path, ['inequality', 'lhs', 'rhs', 'margin', 'status'], rows)


def write_spectrum_csv(path, spectrum):
    rows = [(int(k), int(c), float(v)) for k, c, v in zip(spectrum.k, spectrum.count, spectrum.value)]
    return write_rows(path, ['k', 'count', 'value'], rows)


def write_plot_file(path, spectrum):
    """Two-column 'k value' file of the shell densities"""
    path = Path(path)
    lines = [f'{int(k)} {_num(v)}' for k, v in zip(spectrum.k, spectrum.density) if k > 0]
    path.write_text('\n'.join(lines) + '\n')
    return path


def write_trajectory_csv(path, line):
    rows = [(float(t), float(x[0]), float(x[1]), float(x[2]), float(lam))
            for t, x, lam in zip(line.tau, line.positions, line.running_lambda_a)]
    return write_rows(path, ['tau', 'x', 'y', 'z', 'lambdaA_running'], rows)


def write_timeseries_csv(path, rows):
    columns = ['t', 'U', 'chi', 'chiC', 'delta2', 'theorem2_rhs']
    return write_rows(path, columns, [[float(row[c]) for c in columns] for row in rows])
