from django.apps import AppConfig


class PolicymodelConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "policymodel"
