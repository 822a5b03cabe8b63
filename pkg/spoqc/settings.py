"""
Django settings for the spoqc project.

The project is driven entirely through management commands (see
``manage.py help``); there is no URL configuration and no database.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/4.2/ref/settings/
"""

import os
from pathlib import Path

from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


SECRET_KEY = config(
    "DJANGO_SECRET_KEY", default="django-insecure-spoqc-local-simulation-key"
)

DEBUG = config("DJANGO_DEBUG", default=False, cast=bool)

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    # Third-party apps
    "rest_framework",
    # Project apps
    "core",
    "codes",
    "noise",
    "optics",
    "circuits",
    "frames",
    "decoding",
    "experiments",
]

# Commands write only to their declared output paths.
DATABASES = {}

REST_FRAMEWORK = {
    "UNAUTHENTICATED_USER": None,
    "STRICT_JSON": True,
    "COMPACT_JSON": False,
}


# Simulation defaults

SPOQC = {
    "WORKERS": config("SPOQC_WORKERS", default=os.cpu_count() or 1, cast=int),
    "DEFAULT_SHOTS": config("SPOQC_DEFAULT_SHOTS", default=100_000, cast=int),
    "DEFAULT_SEED": 0,
    "BOOTSTRAP_RESAMPLES": 200,
    "FT_SURFACE_POINTS": 120,
    "FT_SURFACE_W_RANGE": (0.85, 1.0),
    "FT_SURFACE_W_STEPS": 7,
    "FT_SURFACE_DISTANCE": 11,
    # Individual thresholds used when no FT surface has been computed.
    "AXIS_THRESHOLDS": {
        "p_F": 0.1024,
        "t_rus_over_T2": 0.02348,
        "D": 0.02220,
    },
    "OPTICS_TOLERANCE": 1e-8,
    # Default (min, max) of each threshold sweep axis.
    "SWEEP_RANGES": {
        "p_F": (0.06, 0.14),
        "t_rus_over_T2": (0.015, 0.032),
        "D": (0.015, 0.030),
        "epsilon": (0.02, 0.035),
        "w": (0.7, 1.3),
    },
}


# Logging

LOG_LEVEL = config("SPOQC_LOG_LEVEL", default="INFO")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "spoqc": {
            "format": "{asctime} {levelname} {name}: {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "spoqc",
        },
    },
    "loggers": {
        app: {"handlers": ["console"], "level": LOG_LEVEL, "propagate": False}
        for app in (
            "core",
            "codes",
            "noise",
            "optics",
            "circuits",
            "frames",
            "decoding",
            "experiments",
        )
    },
}


# Internationalization
# https://docs.djangoproject.com/en/4.2/topics/i18n/

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = False

USE_TZ = True
