from django.apps import AppConfig


class LogisticConfig(AppConfig):
    """Logistic-regression estimators: ML, Firth, ridge and Bayesian shrinkage."""

    default_auto_field = 'django.db.models.BigAutoField'
    name = 'logistic'
    verbose_name = 'Logistic Estimators'
