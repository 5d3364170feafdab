from django.template.loader import render_to_string

from core import VERSION
from core.invariant_utils import assemble_report
from core.management.lab_command import LabCommand
from core.run_config import parse_bool
from core.snapshot_io import read_snapshot, write_report_csv, write_verdicts_csv


class Command(LabCommand):
    help = 'Compute the helicity invariants of a snapshot and check the inequality chain'
    subcommand = 'invariants'
    option_types = {'snapshot': str, 'pairs': parse_bool, 'pair_T': float, 'closed': parse_bool,
                    'bracket_samples': int}
    option_defaults = {'pairs': False, 'pair_T': None, 'closed': False, 'bracket_samples': 200_000}

    def add_command_arguments(self, parser):
        parser.add_argument('snapshot', help='spectral .csv or grid .json snapshot')
        parser.add_argument('--pairs', action='store_true', default=None,
                            help='also estimate the pairwise quantities (compact fields)')
        parser.add_argument('--pair-T', dest='pair_T', type=float, help='line length of the pair estimator')
        parser.add_argument('--closed', action='store_true', default=None,
                            help='follow every line for exactly one period (tube fields)')
        parser.add_argument('--bracket-samples', dest='bracket_samples', type=int)
        parser.add_argument('--n-seeds', dest='n_seeds', type=int)
        parser.add_argument('--t-ladder', dest='t_ladder', help='comma separated integration times')
        parser.add_argument('--n-pairs', dest='n_pairs', type=int)

    def run(self, config, out_dir):
        field = read_snapshot(config['snapshot'])
        report = assemble_report(
            field,
            n_seeds=config['n_seeds'],
            t_ladder=config['t_ladder'],
            seed=config['seed'],
            n_pairs=config['n_pairs'] if config['pairs'] else None,
            pair_T=config['pair_T'],
            rtol=config['rtol'],
            atol=config['atol'],
            threads=config['threads'],
            closed=config['closed'],
            bracket_samples=config['bracket_samples'],
        )
        write_report_csv(out_dir / 'invariants.csv', report)
        write_verdicts_csv(out_dir / 'verdicts.csv', report.verdicts)
        table = render_to_string('core/invariant_report.txt', {
            'snapshot': config['snapshot'], 'version': VERSION, 'report': report, 'rows': report.rows(),
        })
        (out_dir / 'invariants.txt').write_text(table)
        self.stdout.write(table)

        failed = [verdict.name for verdict in report.failed]
        if failed:
            self.stdout.write(self.style.ERROR(f'{len(failed)} inequality(ies) violated at 2 sigma'))
        else:
            self.success(f'All checked inequalities hold; artifacts in {out_dir}')
        return failed
