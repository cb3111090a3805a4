from .base import *  # noqa

DEBUG = True

# Shorter lines on the console while iterating locally
LOGGING["handlers"]["console"]["formatter"] = "simple"  # noqa: F405
