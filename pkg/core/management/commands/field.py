from core.exceptions import RejectedInputError
from core.field_constructors import (
    PROFILES, TubeSpec, abc_field, circular_wave, hopf_pair, random_powerlaw, twisted_tube, two_tubes,
)
from core.management.lab_command import LabCommand
from core.run_config import parse_floats
from core.snapshot_io import write_snapshot

CONSTRUCTORS = ('abc', 'wave', 'powerlaw', 'tube', 'two-tubes')


class Command(LabCommand):
    help = 'Construct a field (abc | wave | powerlaw | tube | two-tubes) and write its snapshot'
    subcommand = 'field'
    option_types = {
        'constructor': str, 'coefficients': parse_floats, 'name': str,
        'B0': float, 'k': int,
        'alpha': float, 'gamma_plus': float, 'gamma_minus': float, 'kmax': int,
        'R': float, 'a': float, 'kappa': int, 'phi': float, 'phi2': float, 'profile': str, 'N': int,
    }
    option_defaults = {
        'coefficients': (1.0, 1.0, 1.0), 'name': 'field',
        'B0': 1.0, 'k': 1,
        'alpha': 5.0 / 3.0, 'gamma_plus': 1.0, 'gamma_minus': 0.0, 'kmax': 16,
        'R': 1.0, 'a': 0.25, 'kappa': 0, 'phi': 1.0, 'phi2': 1.0, 'profile': 'bump', 'N': 64,
    }

    def add_command_arguments(self, parser):
        parser.add_argument('constructor', choices=CONSTRUCTORS)
        parser.add_argument('coefficients', nargs='*', type=float, help='A B C of the ABC field')
        parser.add_argument('--name', help='snapshot file stem (default "field")')
        parser.add_argument('--B0', type=float)
        parser.add_argument('--k', type=int)
        parser.add_argument('--alpha', type=float)
        parser.add_argument('--gamma-plus', dest='gamma_plus', type=float)
        parser.add_argument('--gamma-minus', dest='gamma_minus', type=float)
        parser.add_argument('--kmax', type=int)
        parser.add_argument('--R', type=float)
        parser.add_argument('--a', type=float)
        parser.add_argument('--kappa', type=int)
        parser.add_argument('--phi', type=float)
        parser.add_argument('--phi2', type=float)
        parser.add_argument('--profile', choices=PROFILES)
        parser.add_argument('--N', type=int, help='grid points per axis for tube fields')

    def handle(self, *args, **options):
        # an empty positional list means "not given"
        if not options.get('coefficients'):
            options['coefficients'] = None
        return super().handle(*args, **options)

    def build(self, config):
        kind = config['constructor']
        if kind == 'abc':
            coefficients = config['coefficients']
            if len(coefficients) != 3:
                raise RejectedInputError(f'abc takes three coefficients A B C, got {len(coefficients)}')
            return abc_field(*coefficients)
        if kind == 'wave':
            return circular_wave(config['B0'], config['k'])
        if kind == 'powerlaw':
            return random_powerlaw(config['alpha'], config['gamma_plus'], config['gamma_minus'],
                                   config['kmax'], config['seed'])
        if kind == 'tube':
            spec = TubeSpec(R=config['R'], a=config['a'], kappa=config['kappa'], phi=config['phi'],
                            profile=config['profile'])
            return twisted_tube(spec, config['N'])
        spec1, spec2 = hopf_pair(config['R'], config['a'], config['phi'], config['phi2'],
                                 profile=config['profile'])
        return two_tubes(spec1, spec2, config['N'])

    def run(self, config, out_dir):
        field = self.build(config)
        path = write_snapshot(out_dir / config['name'], field)
        diagnostics = getattr(field, 'diagnostics', None)
        if diagnostics is not None:
            self.stdout.write(f"grid N={field.N}: max|div B| = {diagnostics['divergence_max']:.3e}, "
                              f"relative {diagnostics['divergence_relative']:.3e}")
        else:
            self.stdout.write(f'{field.full_mode_count} modes, kmax = {field.kmax}')
        self.success(f'Wrote {config["constructor"]} snapshot to {path}')
        return []
