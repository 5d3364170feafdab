from core.field_constructors import seeded_generator
from core.fieldline_utils import lambda_A, trace_lines
from core.invariant_utils import sample_domain
from core.management.lab_command import LabCommand
from core.snapshot_io import write_rows, read_snapshot, write_trajectory_csv


class Command(LabCommand):
    help = 'Trace field lines from random seeds and write one trajectory CSV per line'
    subcommand = 'trace'
    option_types = {'snapshot': str, 'seeds': int, 'T': float}
    option_defaults = {'seeds': 4, 'T': 100.0}

    def add_command_arguments(self, parser):
        parser.add_argument('snapshot', help='spectral .csv or grid .json snapshot')
        parser.add_argument('--seeds', type=int, help='number of uniformly drawn seed points')
        parser.add_argument('--T', type=float, help='integration time per line')

    def run(self, config, out_dir):
        field = read_snapshot(config['snapshot'])
        seeds = sample_domain(field, config['seeds'], seeded_generator(config['seed']))
        lines = trace_lines(field, seeds, config['T'], rtol=config['rtol'], atol=config['atol'],
                            threads=config['threads'], exact_limit=config['exact_mode_limit'])
        summary = []
        for i, line in enumerate(lines):
            write_trajectory_csv(out_dir / f'trajectory_{i:03d}.csv', line)
            summary.append((i, *(float(c) for c in line.seed), float(line.T), lambda_A(line), line.status))
        write_rows(out_dir / 'lines.csv', ['line', 'x0', 'y0', 'z0', 'T', 'lambdaA', 'status'], summary)
        self.success(f'Traced {len(lines)} lines to T={config["T"]:g} into {out_dir}')
        return []
