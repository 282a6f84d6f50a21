"""
Django settings for the gaze2afc command line.

Only the pieces the analysis uses are configured: the installed app,
logging, and the `GAZE2AFC` dictionary whose keys override the defaults
of `gaze2afc.conf.PipelineConfig`.
"""

import os
from pathlib import Path

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.environ.get("GAZE2AFC_SECRET_KEY", "gaze2afc-not-a-web-service")

DEBUG = False

INSTALLED_APPS = [
    "gaze2afc",
]

# No models are defined; the dummy backend keeps the test runner from
# creating a database.
DATABASES = {}

USE_TZ = True

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "stage": {
            "format": "{asctime} {levelname:<7} {name}: {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "stage",
        },
    },
    "loggers": {
        "gaze2afc": {
            "handlers": ["console"],
            "level": os.environ.get("GAZE2AFC_LOG_LEVEL", "INFO"),
            "propagate": False,
        },
    },
}

# Section -> key -> value overrides of the PipelineConfig defaults.
GAZE2AFC = {
    "sampler": {
        "chains": 4,
        "draws": 1000,
        "warmup": 1000,
    },
}
