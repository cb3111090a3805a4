from django.apps import AppConfig


class FlowencodeConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "flowencode"
