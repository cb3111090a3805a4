from django.apps import AppConfig


class EnvsimConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "envsim"
