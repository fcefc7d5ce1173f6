"""
JSON serializers for fit results.

Matrices are emitted row-major as nested lists; non-finite numbers become
null so the output stays strict JSON.
"""
import math

import numpy as np
from rest_framework import serializers
from rest_framework.renderers import JSONRenderer


def finite_or_none(value):
    """Recursively convert numpy values to JSON-safe Python values."""
    if isinstance(value, np.ndarray):
        return finite_or_none(value.tolist())
    if isinstance(value, (list, tuple)):
        return [finite_or_none(v) for v in value]
    if isinstance(value, dict):
        return {str(k): finite_or_none(v) for k, v in value.items()}
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def render_json(data) -> bytes:
    """Strict, indented JSON with a trailing newline."""
    body = JSONRenderer().render(finite_or_none(data), renderer_context={'indent': 2})
    return body + b'\n'


class ColumnMetaSerializer(serializers.Serializer):
    kind = serializers.CharField(source='kind.value')
    coding = serializers.CharField(source='coding.value')
    original_name = serializers.CharField()
    name = serializers.CharField(source='label')
    level = serializers.CharField(allow_null=True)


class FitResultSerializer(serializers.Serializer):
    """
    Serializer for linear fits.

    Field names follow the FitResult type; covariances are given both for
    beta alone and for (intercept, beta).
    """

    method_tag = serializers.CharField()
    intercept = serializers.SerializerMethodField()
    beta = serializers.SerializerMethodField()
    sigma2 = serializers.SerializerMethodField()
    lambda_ = serializers.SerializerMethodField()
    cov_beta = serializers.SerializerMethodField()
    cov_beta_corrected = serializers.SerializerMethodField()
    cov_theta = serializers.SerializerMethodField()
    structure = serializers.SerializerMethodField()
    correction_fallback = serializers.BooleanField()
    details = serializers.SerializerMethodField()

    def get_intercept(self, obj):
        return finite_or_none(obj.intercept)

    def get_beta(self, obj):
        return finite_or_none(obj.beta)

    def get_sigma2(self, obj):
        return finite_or_none(obj.sigma2)

    def get_lambda_(self, obj):
        return finite_or_none(obj.lam)

    def get_cov_beta(self, obj):
        return finite_or_none(obj.cov_beta)

    def get_cov_beta_corrected(self, obj):
        return finite_or_none(obj.cov_beta_corrected)

    def get_cov_theta(self, obj):
        return finite_or_none(obj.cov_theta)

    def get_structure(self, obj):
        return obj.structure.to_dict() if obj.structure is not None else None

    def get_details(self, obj):
        return finite_or_none(obj.details)

    def to_representation(self, instance):
        data = super().to_representation(instance)
        data['lambda'] = data.pop('lambda_')
        return data
