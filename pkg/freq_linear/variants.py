"""
Named ridge variants and their penalty structures.

    ridge       one penalty for all covariates
    ridge_2     two declared groups
    ridge_2un   two declared groups, the first unpenalized
    ridge_3     three declared groups
    ridge_2r    two random groups (RANDOM_GROUP_SIZE covariates vs the rest)
    ridge_2unr  as ridge_2r with the small group unpenalized
"""
from typing import Optional, Sequence

import numpy as np

from core.exceptions import DataValidationError
from core.structure import GroupMode, PenaltyStructure


RANDOM_GROUP_SIZE = 3

DECLARED_GROUP_COUNT = {
    'ridge_2': 2,
    'ridge_2un': 2,
    'ridge_3': 3,
}
RANDOM_VARIANTS = ('ridge_2r', 'ridge_2unr')
RIDGE_VARIANTS = ('ridge',) + tuple(DECLARED_GROUP_COUNT) + RANDOM_VARIANTS


def complete_groups(p: int, groups: Sequence[Sequence[int]]):
    """Append the unlisted covariates as a final group, if there are any."""
    listed = {int(k) for g in groups for k in g}
    rest = [k for k in range(p) if k not in listed]
    return [list(g) for g in groups] + ([rest] if rest else [])


def ridge_structure(tag: str, p: int, groups: Optional[Sequence[Sequence[int]]] = None,
                    rng: Optional[np.random.Generator] = None,
                    random_size: int = RANDOM_GROUP_SIZE) -> PenaltyStructure:
    """
    Penalty structure for a named ridge variant.

    Declared-group variants take ``groups`` as 0-based index lists; covariates
    not listed form one extra trailing group. Random variants draw a fresh
    assignment from ``rng`` on every call.
    """
    if tag == 'ridge':
        return PenaltyStructure.global_(p)
    if tag in RANDOM_VARIANTS:
        if rng is None:
            raise DataValidationError(f"'{tag}' needs a random generator")
        return PenaltyStructure.random_groups(p, random_size, rng, unpenalize_small=(tag == 'ridge_2unr'))
    if tag in DECLARED_GROUP_COUNT:
        if not groups:
            raise DataValidationError(f"'{tag}' needs a group specification")
        members = complete_groups(p, groups)
        expected = DECLARED_GROUP_COUNT[tag]
        if len(members) != expected:
            raise DataValidationError(f"'{tag}' needs {expected} groups; got {len(members)}")
        modes = [GroupMode.estimated()] * expected
        if tag == 'ridge_2un':
            modes[0] = GroupMode.unpenalized()
        return PenaltyStructure.from_groups(p, members, modes)
    raise DataValidationError(f"Unknown ridge variant '{tag}'")
