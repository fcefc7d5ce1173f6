from rest_framework import serializers

from core.serializers import finite_or_none

from .draws import summarize_draws


class PosteriorDrawsSerializer(serializers.Serializer):
    """Posterior summary; the raw draws go to a separate CSV."""

    method_tag = serializers.CharField()
    chains = serializers.IntegerField()
    n_draws = serializers.IntegerField()
    column_names = serializers.ListField(child=serializers.CharField())
    diagnostics_warning = serializers.BooleanField()
    posterior_mean = serializers.SerializerMethodField()
    posterior_log_lambda = serializers.SerializerMethodField()
    summary = serializers.SerializerMethodField()
    structure = serializers.SerializerMethodField()
    details = serializers.SerializerMethodField()

    def get_posterior_mean(self, obj):
        return finite_or_none({'beta0': float(obj.beta0.mean()), 'beta': obj.beta.mean(axis=0)})

    def get_posterior_log_lambda(self, obj):
        return finite_or_none(obj.posterior_log_lambda)

    def get_summary(self, obj):
        return finite_or_none(summarize_draws(obj).to_dict(orient='index'))

    def get_structure(self, obj):
        return obj.structure.to_dict() if obj.structure is not None else None

    def get_details(self, obj):
        return finite_or_none(obj.details)
