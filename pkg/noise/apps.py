from django.apps import AppConfig


class NoiseConfig(AppConfig):
    name = "noise"
    verbose_name = "RUS rates and Pauli channels"
