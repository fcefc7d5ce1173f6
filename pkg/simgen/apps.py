from django.apps import AppConfig


class SimgenConfig(AppConfig):
    """Scenario generators and replication protocols."""

    default_auto_field = 'django.db.models.BigAutoField'
    name = 'simgen'
    verbose_name = 'Simulation Scenarios'
