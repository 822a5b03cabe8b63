from django.apps import AppConfig


class OpticsConfig(AppConfig):
    name = "optics"
    verbose_name = "Linear-optics oracle"
