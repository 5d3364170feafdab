"""
Run configuration for the lab commands.

Values are resolved from settings.HELICITY_LAB, then an optional key=value
file (--config), then flags given on the command line.
"""
from dataclasses import dataclass
from pathlib import Path

from django.conf import settings
from dotenv import dotenv_values

from . import VERSION
from .exceptions import ConfigurationError

# keys that describe where and how fast a run executes, not what it computes
RUNTIME_KEYS = ('out_dir', 'threads', 'verbose')


def parse_bool(value):
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ('1', 'true', 'yes', 'on'):
        return True
    if text in ('0', 'false', 'no', 'off', ''):
        return False
    raise ValueError(f'not a boolean: {value!r}')


def parse_ladder(value):
    """'250,500,1000' -> (250.0, 500.0, 1000.0)"""
    if isinstance(value, (list, tuple)):
        items = value
    else:
        items = [item for item in str(value).split(',') if item.strip()]
    ladder = tuple(float(item) for item in items)
    if not ladder or any(t <= 0 for t in ladder):
        raise ValueError(f'ladder needs positive times, got {value!r}')
    return tuple(sorted(ladder))


def parse_floats(value):
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    return tuple(float(v) for v in str(value).replace(',', ' ').split())


GLOBAL_TYPES = {
    'out_dir': str,
    'threads': int,
    'seed': int,
    'rtol': float,
    'atol': float,
    'exact_mode_limit': int,
    'n_seeds': int,
    't_ladder': parse_ladder,
    'n_pairs': int,
    'verbose': parse_bool,
}


def settings_defaults():
    lab = getattr(settings, 'HELICITY_LAB', {})
    defaults = {key.lower(): value for key, value in lab.items()}
    defaults.setdefault('verbose', False)
    return defaults


def normalize_key(key):
    return key.strip().replace('-', '_')


def read_config_file(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f'config file {path} does not exist')
    values = dotenv_values(path)
    return {normalize_key(key): value for key, value in values.items() if value is not None}


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def manifest(self):
        """Everything that determines the run's outputs, JSON-ready"""
        config = {key: _jsonable(value) for key, value in self.values.items() if key not in RUNTIME_KEYS}
        return {'subcommand': self.subcommand, 'version': VERSION, 'config': config}


def _jsonable(value):
    if isinstance(value, tuple):
        return list(value)
    if isinstance(value, Path):
        return str(value)
    return value


def resolve_config(subcommand, options, types, defaults):
    """Merge settings, --config file and explicit flags into a typed RunConfig.

    `types` maps every accepted key to a coercion callable and `defaults`
    holds the command's own defaults; a flag counts as given when its
    parsed value is not None.
    """
    types = {**GLOBAL_TYPES, **types}
    merged = {key: value for key, value in settings_defaults().items() if key in types}
    merged.update(defaults)

    if options.get('config'):
        from_file = read_config_file(options['config'])
        unknown = sorted(set(from_file) - set(types))
        if unknown:
            raise ConfigurationError(f'unknown configuration key(s) for {subcommand}: {", ".join(unknown)}')
        merged.update(from_file)

    for key in types:
        if options.get(key) is not None:
            merged[key] = options[key]

    values = {}
    for key, coerce in types.items():
        if key not in merged:
            continue
        try:
            values[key] = None if merged[key] is None else coerce(merged[key])
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f'bad value for {key}: {merged[key]!r} ({exc})') from exc
    if values.get('threads', 1) < 1:
        raise ConfigurationError('threads must be at least 1')
    return RunConfig(subcommand, dict(sorted(values.items())))
