"""
Run configuration schema.

A run config is a JSON object validated here; errors come back as DRF
detail dicts and are reported with dotted field paths.
"""
from rest_framework import serializers

from bayes_shrink.priors import McmcConfig
from core.exceptions import DataValidationError
from core.rng import MAX_SEED
from core.validators import parse_level
from freq_linear.ridge import CRITERIA, OPTIMIZERS
from simgen.registry import DATASET_SCENARIOS, LINEAR, LOGISTIC, SCENARIOS
from simgen.scenarios import INTRO_GROUPS

from .methods import GROUPED_METHODS, METHODS, MethodSpec


FAMILIES = (LINEAR, LOGISTIC)
MSEP_TARGETS = ('true', 'observed')
SCENARIO_FAMILY = {name: (LOGISTIC if name.startswith('logistic') else LINEAR) for name in SCENARIOS}


class McmcSerializer(serializers.Serializer):
    chains = serializers.IntegerField(min_value=1, required=False)
    iterations = serializers.IntegerField(min_value=2, required=False)
    burn_in = serializers.IntegerField(min_value=0, required=False)
    thin = serializers.IntegerField(min_value=1, required=False)

    def validate(self, attrs):
        try:
            McmcConfig(**attrs)
        except DataValidationError as exc:
            raise serializers.ValidationError(str(exc))
        return attrs


class MethodSerializer(serializers.Serializer):
    tag = serializers.CharField(max_length=64)
    method = serializers.CharField(max_length=64, required=False)
    groups = serializers.ListField(
        child=serializers.ListField(child=serializers.IntegerField(min_value=0), allow_empty=False),
        required=False,
    )
    scale = serializers.FloatField(min_value=1e-12, required=False)
    mcmc = McmcSerializer(required=False)
    corrected = serializers.BooleanField(default=True)
    criterion = serializers.ChoiceField(choices=CRITERIA, default='reml')
    optimizer = serializers.ChoiceField(choices=OPTIMIZERS, default='nelder-mead')
    folds = serializers.IntegerField(min_value=2, required=False)

    def validate(self, attrs):
        attrs.setdefault('method', attrs['tag'])
        known = set(METHODS[LINEAR]) | set(METHODS[LOGISTIC])
        if attrs['method'] not in known:
            raise serializers.ValidationError({'method': f"Unknown method '{attrs['method']}'."})
        return attrs


class DatasetSerializer(serializers.Serializer):
    path = serializers.CharField()
    schema = serializers.CharField()
    response = serializers.CharField()
    noise_covariates = serializers.IntegerField(min_value=0, default=0)
    family = serializers.ChoiceField(choices=FAMILIES, default=LINEAR)


class RunConfigSerializer(serializers.Serializer):
    scenario = serializers.ChoiceField(choices=sorted(SCENARIOS), required=False, allow_null=True)
    scenario_params = serializers.DictField(required=False, default=dict)
    dataset = DatasetSerializer(required=False)
    methods = MethodSerializer(many=True, allow_empty=False)
    groups = serializers.ListField(
        child=serializers.ListField(child=serializers.IntegerField(min_value=0), allow_empty=False),
        required=False,
    )
    replicates = serializers.IntegerField(min_value=1, default=1)
    seed = serializers.IntegerField(min_value=0, max_value=MAX_SEED,
                                    error_messages={'required': 'A seed is required.'})
    parallelism = serializers.IntegerField(min_value=1, default=1)
    level = serializers.FloatField(default=0.95)
    msep_target = serializers.ChoiceField(choices=MSEP_TARGETS, default='true')
    calslope = serializers.BooleanField(default=False)

    def validate_level(self, value):
        try:
            return parse_level(value)
        except serializers.ValidationError as exc:
            raise serializers.ValidationError(exc.detail['level'])

    def validate(self, attrs):
        scenario = attrs.get('scenario')
        dataset = attrs.get('dataset')
        if not scenario and not dataset:
            raise serializers.ValidationError({'scenario': 'Either a scenario or a dataset is required.'})
        if scenario in DATASET_SCENARIOS and not dataset:
            raise serializers.ValidationError({'dataset': f"Scenario '{scenario}' needs a dataset."})
        family = SCENARIO_FAMILY[scenario] if scenario else dataset['family']
        if scenario in DATASET_SCENARIOS and dataset and dataset['family'] != LINEAR:
            raise serializers.ValidationError({'dataset': {'family': f"Scenario '{scenario}' is linear only."}})
        attrs['family'] = family

        errors = {}
        seen = set()
        notes = []
        for i, method in enumerate(attrs['methods']):
            problems = {}
            if method['tag'] in seen:
                problems['tag'] = f"Duplicate method tag '{method['tag']}'."
            seen.add(method['tag'])
            if method['method'] not in METHODS[family]:
                problems['method'] = f"Method '{method['method']}' is not available for {family} models."
            if method['method'] in GROUPED_METHODS and not (method.get('groups') or attrs.get('groups')
                                                             or _scenario_groups(scenario)):
                problems['groups'] = f"Method '{method['method']}' needs a group specification."
            if method['method'].startswith('bayes-') and 'mcmc' not in method:
                notes.append(f"methods.{i}: no mcmc block; using the configured sampler defaults")
            if problems:
                errors[i] = problems
        if errors:
            raise serializers.ValidationError({'methods': errors})
        attrs['notes'] = notes
        return attrs


def _scenario_groups(scenario):
    if scenario in ('intro', 'intro-equal'):
        return INTRO_GROUPS
    return ()


def method_specs(validated) -> list:
    """MethodSpec objects for a validated config; run-level groups fill in missing method groups."""
    default_groups = validated.get('groups') or list(_scenario_groups(validated.get('scenario')))
    specs = []
    for m in validated['methods']:
        mcmc = McmcConfig(**m['mcmc']) if 'mcmc' in m else None
        specs.append(MethodSpec(
            tag=m['tag'], method=m['method'], groups=m.get('groups') or default_groups,
            scale=m.get('scale'), mcmc=mcmc, corrected=m['corrected'], criterion=m['criterion'],
            optimizer=m['optimizer'], folds=m.get('folds'),
        ))
    return specs
