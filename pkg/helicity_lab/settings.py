"""
Django settings for helicity_lab project.

The project has no web surface: it is driven entirely through management
commands (field, trace, invariants, evolve, spectra, check). The database only
indexes runs; every run also writes a manifest next to its artifacts.
"""

from pathlib import Path
import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.getenv('HELICITY_LAB_SECRET_KEY', 'helicity-lab-local-only')

DEBUG = os.getenv('HELICITY_LAB_DEBUG', 'False') == 'True'

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'core',
]

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [],
        },
    },
]


# Database (run index only)

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': os.getenv('HELICITY_LAB_DB', str(BASE_DIR / 'db.sqlite3')),
    }
}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Numerical defaults, overridable per run through --config files and flags

HELICITY_LAB = {
    'OUT_DIR': os.getenv('HELICITY_LAB_OUT_DIR', 'runs'),
    'THREADS': int(os.getenv('HELICITY_LAB_THREADS', '1')),
    'SEED': int(os.getenv('HELICITY_LAB_SEED', '0')),
    'RTOL': float(os.getenv('HELICITY_LAB_RTOL', '1e-9')),
    'ATOL': float(os.getenv('HELICITY_LAB_ATOL', '1e-11')),
    'EXACT_MODE_LIMIT': int(os.getenv('HELICITY_LAB_EXACT_MODE_LIMIT', '512')),
    'N_SEEDS': int(os.getenv('HELICITY_LAB_N_SEEDS', '64')),
    'T_LADDER': os.getenv('HELICITY_LAB_T_LADDER', '250,500,1000'),
    'N_PAIRS': int(os.getenv('HELICITY_LAB_N_PAIRS', '16')),
}


# Logging

LOG_LEVEL = os.getenv('HELICITY_LAB_LOG_LEVEL', 'INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '{levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'core': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}
