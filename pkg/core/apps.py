from django.apps import AppConfig


class CoreConfig(AppConfig):
    """Configuration for the core data-model application."""

    default_auto_field = 'django.db.models.BigAutoField'
    name = 'core'
    verbose_name = 'Shrinkage Core'
