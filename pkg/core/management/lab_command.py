"""
Shared base class of the lab management commands
"""
import logging

from django.core.management.base import BaseCommand, CommandError

from core.exceptions import ConfigurationError, HelicityLabError
from core.run_config import resolve_config
from core.run_utils import RunManager


class LabCommand(BaseCommand):
    """Resolves the run configuration, writes the manifest and maps errors to exit codes.

    Subclasses set `subcommand`, `option_types` and `option_defaults`, add
    their own flags in `add_command_arguments` and do the work in
    `run(config, out_dir)`, returning the names of failed checks.
    """
    subcommand = None
    option_types = {}
    option_defaults = {}

    def add_arguments(self, parser):
        parser.add_argument('--config', help='key=value file of run parameters')
        parser.add_argument('--out-dir', dest='out_dir', help='directory for all artifacts of this run')
        parser.add_argument('--threads', type=int, help='worker threads for field-line batches')
        parser.add_argument('--seed', type=int, help='root seed of every random draw')
        parser.add_argument('--verbose', action='store_true', default=None, help='debug logging for this run')
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def handle(self, *args, **options):
        try:
            config = resolve_config(self.subcommand, options, self.option_types, self.option_defaults)
        except ConfigurationError as exc:
            raise CommandError(str(exc), returncode=2) from exc
        if config.get('verbose'):
            logging.getLogger('core').setLevel(logging.DEBUG)

        out_dir = RunManager.prepare_out_dir(config)
        RunManager.write_manifest(config, out_dir)
        try:
            failures = self.run(config, out_dir) or []
        except HelicityLabError as exc:
            RunManager.record_run(config, out_dir, 'rejected', 2)
            raise CommandError(f'{self.subcommand}: {exc}', returncode=2) from exc

        if failures:
            RunManager.record_run(config, out_dir, 'failed', 1)
            raise CommandError(f'{self.subcommand}: failed: {", ".join(failures)}', returncode=1)
        RunManager.record_run(config, out_dir, 'ok', 0)

    def run(self, config, out_dir):
        raise NotImplementedError

    def success(self, message):
        self.stdout.write(self.style.SUCCESS(message))

    def notice(self, message):
        self.stdout.write(self.style.WARNING(message))
