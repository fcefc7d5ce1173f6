from django.apps import AppConfig


class FreqLinearConfig(AppConfig):
    """Frequentist linear estimators: OLS, stepwise, lasso and ridge."""

    default_auto_field = 'django.db.models.BigAutoField'
    name = 'freq_linear'
    verbose_name = 'Frequentist Linear Estimators'
