"""
Django settings for articulatory_lr project.

The project has no web surface: Django provides the app registry, the
management commands (filter, shapes, run, synth) and the logging setup.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/6.0/ref/settings/
"""

import os
from pathlib import Path

from dotenv import load_dotenv


load_dotenv(".env")

BASE_DIR = Path(__file__).resolve().parent.parent


# Sin superficie web: la clave solo satisface al framework
SECRET_KEY = os.getenv("ARTICULATORY_LR_SECRET_KEY", "articulatory-lr-no-web-surface")

DEBUG = os.getenv("DJANGO_DEBUG", "false").lower() == "true"

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'rest_framework',

    'speaker_shapes',
]

# No database: datasets live in CSV files
DATABASES = {}


# Análisis de formas y LR
# =============================================================================

def _int_env(name: str, default: int) -> int:
    value = os.getenv(name)
    if value is None or not value.strip():
        return default
    try:
        return int(value)
    except ValueError:
        raise RuntimeError(f"{name} must be an integer (got {value!r})")


def _float_env(name: str, default: float) -> float:
    value = os.getenv(name)
    if value is None or not value.strip():
        return default
    try:
        return float(value)
    except ValueError:
        raise RuntimeError(f"{name} must be a number (got {value!r})")


SPEAKER_SHAPES = {
    # Techo de hilos para el puntaje por pares (nunca se supera)
    'MAX_WORKERS': max(1, _int_env("ARTICULATORY_LR_MAX_WORKERS", os.cpu_count() or 1)),
    'GPA_TOLERANCE': _float_env("ARTICULATORY_LR_GPA_TOLERANCE", 1e-10),
    'GPA_MAX_ITER': _int_env("ARTICULATORY_LR_GPA_MAX_ITER", 200),
    'MAD_THRESHOLD': _float_env("ARTICULATORY_LR_MAD_THRESHOLD", 3.5),
}


# Logging
# =============================================================================

LOG_LEVEL = os.getenv("ARTICULATORY_LR_LOG_LEVEL", "INFO").upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
            'stream': 'ext://sys.stderr',
        },
    },
    'loggers': {
        'speaker_shapes': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}


# Internationalization
# https://docs.djangoproject.com/en/6.0/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True
