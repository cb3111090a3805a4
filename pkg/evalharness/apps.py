from django.apps import AppConfig


class EvalharnessConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "evalharness"
