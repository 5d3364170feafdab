"""
Helper functions for run bookkeeping: output directories, manifests and the run table
"""
import json
import logging
from pathlib import Path

from django.db import DatabaseError

from .models import Run

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'


class RunManager:
    """Centralized run bookkeeping"""

    @staticmethod
    def prepare_out_dir(config):
        """Create the output directory named by the configuration"""
        out_dir = Path(config['out_dir'])
        out_dir.mkdir(parents=True, exist_ok=True)
        return out_dir

    @staticmethod
    def write_manifest(config, out_dir):
        """Echo the resolved configuration; identical configurations give identical bytes"""
        path = Path(out_dir) / MANIFEST_NAME
        path.write_text(json.dumps(config.manifest(), indent=2, sort_keys=True) + '\n')
        return path

    @staticmethod
    def record_run(config, out_dir, status='ok', exit_code=0):
        """Index the run in the database; artifacts stay the record if that fails"""
        try:
            return Run.objects.create(
                subcommand=config.subcommand,
                config=json.dumps(config.manifest()['config'], sort_keys=True),
                version=config.manifest()['version'],
                status=status,
                exit_code=exit_code,
                out_dir=str(out_dir),
            )
        except DatabaseError as exc:
            logger.warning('run not recorded (%s); run "manage.py migrate" to create the run table', exc)
            return None
