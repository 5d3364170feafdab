from django.template.loader import render_to_string

from core import VERSION
from core.acceptance_utils import CHECKS, run_checks
from core.management.lab_command import LabCommand
from core.run_config import parse_bool
from core.snapshot_io import write_rows


def parse_numbers(value):
    items = value if isinstance(value, (list, tuple)) else str(value).replace(',', ' ').split()
    numbers = tuple(sorted({int(item) for item in items}))
    unknown = [n for n in numbers if n not in CHECKS]
    if unknown:
        raise ValueError(f'no acceptance check numbered {unknown}')
    return numbers


class Command(LabCommand):
    help = 'Run the acceptance battery and write a pass/fail summary'
    subcommand = 'acceptance'
    option_types = {'quick': parse_bool, 'only': parse_numbers}
    option_defaults = {'quick': False, 'only': tuple(CHECKS)}

    def add_command_arguments(self, parser):
        parser.add_argument('--quick', action='store_true', default=None,
                            help='fewer seeds, shorter lines and coarser spectra')
        parser.add_argument('--only', help='comma separated check numbers (default: all)')

    def run(self, config, out_dir):
        results = run_checks(config['only'], quick=config['quick'], seed=config['seed'],
                             threads=config['threads'])
        write_rows(out_dir / 'checks.csv', ['check', 'name', 'status', 'measured', 'expected', 'detail'],
                   [(r.number, r.name, r.status, r.measured, r.expected, r.detail) for r in results])
        summary = render_to_string('core/check_summary.txt', {
            'version': VERSION, 'quick': config['quick'], 'results': results,
            'passed': sum(r.passed for r in results),
        })
        (out_dir / 'checks.txt').write_text(summary)
        self.stdout.write(summary)

        failed = [f'check {r.number}' for r in results if not r.passed]
        if not failed:
            self.success(f'All {len(results)} checks passed')
        return failed
