from django.apps import AppConfig


class EvaluationConfig(AppConfig):
    """Prediction-quality metrics and their aggregation across replicates."""

    default_auto_field = 'django.db.models.BigAutoField'
    name = 'evaluation'
    verbose_name = 'Evaluation'
