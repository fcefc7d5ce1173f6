from rest_framework import serializers

from core.serializers import finite_or_none


class LogisticFitSerializer(serializers.Serializer):
    method_tag = serializers.CharField()
    intercept = serializers.SerializerMethodField()
    beta = serializers.SerializerMethodField()
    lambda_ = serializers.SerializerMethodField()
    converged = serializers.BooleanField()
    iterations = serializers.IntegerField()
    details = serializers.SerializerMethodField()

    def get_intercept(self, obj):
        return finite_or_none(obj.intercept)

    def get_beta(self, obj):
        return finite_or_none(obj.beta)

    def get_lambda_(self, obj):
        return finite_or_none(obj.lam)

    def get_details(self, obj):
        return finite_or_none(obj.details)

    def to_representation(self, instance):
        data = super().to_representation(instance)
        data['lambda'] = data.pop('lambda_')
        return data
