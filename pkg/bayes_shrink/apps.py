from django.apps import AppConfig


class BayesShrinkConfig(AppConfig):
    """Gibbs samplers for Bayesian shrinkage regression."""

    default_auto_field = 'django.db.models.BigAutoField'
    name = 'bayes_shrink'
    verbose_name = 'Bayesian Shrinkage'
