"""Validation helpers shared by config serializers and the interval code."""
from rest_framework.exceptions import ValidationError


def parse_level(value, name: str = 'level') -> float:
    """Interval level as a float strictly inside (0, 1); NaN is rejected."""
    try:
        level = float(value)
    except (TypeError, ValueError):
        raise ValidationError({name: f"Interval level must be a number; got {value!r}."})
    if not 0.0 < level < 1.0:
        raise ValidationError({name: f"Interval level must lie strictly between 0 and 1; got {level}."})
    return level


def flatten_errors(detail, prefix: str = '') -> list:
    """
    Flatten a DRF error detail into ``(field.path, message)`` pairs.

    Nested dicts become dotted paths, list positions become indices.
    """
    pairs = []
    if isinstance(detail, dict):
        for key, value in detail.items():
            path = f'{prefix}.{key}' if prefix else str(key)
            if key == 'non_field_errors':
                path = prefix or 'config'
            pairs.extend(flatten_errors(value, path))
    elif isinstance(detail, list):
        if detail and all(not isinstance(item, (dict, list)) for item in detail):
            pairs.extend((prefix or 'config', str(item)) for item in detail)
        else:
            for i, item in enumerate(detail):
                if item:
                    pairs.extend(flatten_errors(item, f'{prefix}.{i}' if prefix else str(i)))
    else:
        pairs.append((prefix or 'config', str(detail)))
    return pairs
