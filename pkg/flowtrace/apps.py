from django.apps import AppConfig


class FlowtraceConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "flowtrace"
