"""
Django settings for the haphazard_bench project.

Only the pieces a command-line benchmark needs are configured: installed apps,
logging and the benchmark defaults below. There is no database, no URL
configuration and no template engine.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""
from pathlib import Path

from decouple import Csv, config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = config('DJANGO_SECRET_KEY', default='haphazard-bench-local-only')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'streams',
    'learners',
    'bench',
]

# Nothing is persisted through the ORM; run records are JSON files.
DATABASES = {}

USE_TZ = True
TIME_ZONE = 'UTC'


# Benchmark defaults

HAPHAZARD_RESULTS_DIR = config('HAPHAZARD_RESULTS_DIR', default=str(BASE_DIR / 'results'), cast=Path)

HAPHAZARD_DEFAULT_SEEDS = config('HAPHAZARD_DEFAULT_SEEDS', default='0,1,2,3,4', cast=Csv(int))

HAPHAZARD_DEFAULT_REPEATS = config('HAPHAZARD_DEFAULT_REPEATS', default=5, cast=int)

# Availability probability at which grids are searched.
HAPHAZARD_GRID_P = config('HAPHAZARD_GRID_P', default=0.5, cast=float)

HAPHAZARD_HYPERPARAMETERS = config(
    'HAPHAZARD_HYPERPARAMETERS',
    default=str(BASE_DIR / 'config' / 'hyperparameters.toml'),
    cast=Path,
)

HAPHAZARD_LOG_LEVEL = config('HAPHAZARD_LOG_LEVEL', default='INFO')


# Logging

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'streams': {'handlers': ['console'], 'level': HAPHAZARD_LOG_LEVEL, 'propagate': False},
        'learners': {'handlers': ['console'], 'level': HAPHAZARD_LOG_LEVEL, 'propagate': False},
        'bench': {'handlers': ['console'], 'level': HAPHAZARD_LOG_LEVEL, 'propagate': False},
    },
}
