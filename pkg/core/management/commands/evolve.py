from core.induction_utils import EvolutionParams, beltrami_closed_form, evolve_series
from core.management.lab_command import LabCommand
from core.snapshot_io import read_spectral, write_rows, write_spectral, write_timeseries_csv
from core.spectral_utils import energy, is_beltrami


class Command(LabCommand):
    help = 'Integrate the induction equation from a spectral snapshot and write a time series'
    subcommand = 'evolve'
    option_types = {'snapshot': str, 'alpha': float, 'eta': float, 'dt': float, 't_end': float,
                    'snapshot_every': float, 'velocity': str, 'N': int}
    option_defaults = {'alpha': 0.0, 'eta': 0.0, 'dt': 1e-2, 't_end': 1.0, 'snapshot_every': None,
                       'velocity': None, 'N': None}

    def add_command_arguments(self, parser):
        parser.add_argument('snapshot', help='spectral .csv snapshot of the initial field')
        parser.add_argument('--alpha', type=float, help='alpha-effect coefficient')
        parser.add_argument('--eta', type=float, help='magnetic diffusivity')
        parser.add_argument('--dt', type=float)
        parser.add_argument('--t-end', dest='t_end', type=float)
        parser.add_argument('--snapshot-every', dest='snapshot_every', type=float,
                            help='write a field snapshot at this interval')
        parser.add_argument('--velocity', help='spectral snapshot of a steady divergence-free velocity')
        parser.add_argument('--N', type=int, help='collocation grid points per axis')

    def run(self, config, out_dir):
        field = read_spectral(config['snapshot'])
        velocity = read_spectral(config['velocity']) if config['velocity'] else None
        params = EvolutionParams(alpha=config['alpha'], eta=config['eta'], dt=config['dt'],
                                 t_end=config['t_end'], velocity=velocity)
        rows, snapshots = evolve_series(field, params, config['snapshot_every'], config['N'])
        write_timeseries_csv(out_dir / 'timeseries.csv', rows)
        if config['snapshot_every']:
            for i, (t, snapshot) in enumerate(snapshots):
                write_spectral(out_dir / f'snapshot_{i:03d}.csv', snapshot)

        if velocity is None and is_beltrami(field) is not None:
            comparison = []
            for row in rows:
                expected = energy(beltrami_closed_form(field, params, row['t']))
                error = abs(row['U'] - expected) / expected if expected > 0 else abs(row['U'])
                comparison.append((row['t'], row['U'], expected, error))
            write_rows(out_dir / 'closed_form.csv', ['t', 'U', 'U_closed_form', 'relative_error'], comparison)
            self.stdout.write(f'closed form: max relative energy error {max(c[3] for c in comparison):.3e}')

        self.success(f'Evolved to t={rows[-1]["t"]:.6g} in {len(rows)} rows; artifacts in {out_dir}')
        return []
