from .dev import *  # noqa

# Keep test output quiet unless something goes wrong
VISAFLOW_LOG_LEVEL = "WARNING"
for _logger in LOGGING["loggers"].values():  # noqa: F405
    _logger["level"] = VISAFLOW_LOG_LEVEL

VISAFLOW_JOBS = 1
