import os
from pathlib import Path

from django.core.exceptions import ImproperlyConfigured
from dotenv import load_dotenv

load_dotenv()

BASE_DIR = Path(__file__).resolve().parent.parent.parent


def get_bool_env(name: str, default: bool = False) -> bool:
    raw_value = os.environ.get(name)
    if raw_value is None:
        return default
    return raw_value.strip().lower() in {"1", "true", "yes", "on"}


def get_int_env(name: str, default: int) -> int:
    raw_value = os.environ.get(name)
    if raw_value is None:
        return default
    try:
        return int(raw_value)
    except ValueError as exc:
        raise ImproperlyConfigured(f"{name} must be an integer") from exc


def get_path_env(name: str, default: Path) -> Path:
    raw_value = os.environ.get(name)
    if raw_value is None or not raw_value.strip():
        return default
    return Path(raw_value.strip()).expanduser()


DEBUG = get_bool_env("DEBUG", False)
SECRET_KEY = os.environ.get("SECRET_KEY") or "visaflow-lab-local"

# Applications
INSTALLED_APPS = [
    # Django built-in apps
    "django.contrib.contenttypes",
    "django.contrib.auth",
    # 3rd-party
    "rest_framework",
    # local apps
    "core",
    "envsim",
    "flowtrace",
    "flowencode",
    "policymodel",
    "trainer",
    "evalharness",
]

TEMPLATES = [
    {
        "BACKEND": "django.template.backends.django.DjangoTemplates",
        "DIRS": [BASE_DIR / "templates"],
        "APP_DIRS": True,
        "OPTIONS": {"context_processors": []},
    },
]

# No database: every artifact lives on disk under the data and run roots
DATABASES = {}

LANGUAGE_CODE = "en-us"
TIME_ZONE = "UTC"
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

############################################
#               VISAFLOW
############################################
VISAFLOW_DATA_ROOT = get_path_env("VISAFLOW_DATA_ROOT", BASE_DIR / "data")
VISAFLOW_RUNS_ROOT = get_path_env("VISAFLOW_RUNS_ROOT", BASE_DIR / "runs")
VISAFLOW_JOBS = get_int_env("VISAFLOW_JOBS", 1)
if VISAFLOW_JOBS < 1:
    raise ImproperlyConfigured("VISAFLOW_JOBS must be at least 1")

VISAFLOW_LOG_LEVEL = os.environ.get("VISAFLOW_LOG_LEVEL", "INFO").upper()

############################################
#               LOGGING
############################################
_LOCAL_APPS = ["core", "envsim", "flowtrace", "flowencode", "policymodel",
               "trainer", "evalharness", "services"]

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{levelname} {asctime} {name} {process:d} {message}",
            "style": "{",
        },
        "simple": {
            "format": "{levelname} {name} {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "root": {
        "handlers": ["console"],
        "level": "WARNING",
    },
    "loggers": {
        app: {
            "handlers": ["console"],
            "level": VISAFLOW_LOG_LEVEL,
            "propagate": False,
        }
        for app in _LOCAL_APPS
    },
}
