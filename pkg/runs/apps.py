from django.apps import AppConfig


class RunsConfig(AppConfig):
    """Batch harness and the fit/simulate/evaluate/validate commands."""

    default_auto_field = 'django.db.models.BigAutoField'
    name = 'runs'
    verbose_name = 'Runs'
