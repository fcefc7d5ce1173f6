"""
Penalty-group structure: the map g(k) from coefficient index to group.

Group indices are 0-based internally; each group carries a mode:
estimated (penalty learned from data), unpenalized (lambda = 0) or
fixed (lambda given).
"""
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import DataValidationError


ESTIMATED = 'estimated'
UNPENALIZED = 'unpenalized'
FIXED = 'fixed'
MODES = (ESTIMATED, UNPENALIZED, FIXED)


@dataclass(frozen=True)
class GroupMode:
    kind: str = ESTIMATED
    value: Optional[float] = None

    def __post_init__(self):
        if self.kind not in MODES:
            raise DataValidationError(f"Unknown group mode '{self.kind}'")
        if self.kind == FIXED:
            if self.value is None or not np.isfinite(self.value) or self.value < 0:
                raise DataValidationError(f"Fixed penalty must be a finite value >= 0; got {self.value}")

    @classmethod
    def estimated(cls) -> 'GroupMode':
        return cls(ESTIMATED)

    @classmethod
    def unpenalized(cls) -> 'GroupMode':
        return cls(UNPENALIZED)

    @classmethod
    def fixed(cls, value: float) -> 'GroupMode':
        return cls(FIXED, float(value))

    def to_dict(self):
        return {'kind': self.kind, 'value': self.value}


@dataclass(frozen=True)
class PenaltyStructure:
    """
    Coefficient-to-group map plus per-group modes.

    Invariants: every group 0..G-1 appears in group_of; G <= p.
    Local shrinkage is G = p with group_of = identity.
    """

    group_of: Tuple[int, ...]
    modes: Tuple[GroupMode, ...]

    def __post_init__(self):
        group_of = tuple(int(g) for g in self.group_of)
        modes = tuple(self.modes)
        object.__setattr__(self, 'group_of', group_of)
        object.__setattr__(self, 'modes', modes)

        p, G = len(group_of), len(modes)
        if p < 1 or G < 1:
            raise DataValidationError("Penalty structure needs at least one coefficient and one group")
        if G > p:
            raise DataValidationError(f"More groups ({G}) than coefficients ({p})")
        if min(group_of) < 0 or max(group_of) >= G:
            raise DataValidationError(f"Group labels must lie in 0..{G - 1}")
        empty = sorted(set(range(G)) - set(group_of))
        if empty:
            raise DataValidationError(f"Group(s) {empty} have no coefficients")

    @property
    def p(self) -> int:
        return len(self.group_of)

    @property
    def n_groups(self) -> int:
        return len(self.modes)

    @property
    def group_index(self) -> np.ndarray:
        return np.asarray(self.group_of, dtype=np.intp)

    def members(self, g: int) -> np.ndarray:
        return np.flatnonzero(self.group_index == g)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.group_index, minlength=self.n_groups)

    def groups_with(self, kind: str) -> List[int]:
        return [g for g, mode in enumerate(self.modes) if mode.kind == kind]

    @property
    def estimated_groups(self) -> List[int]:
        return self.groups_with(ESTIMATED)

    def expand(self, per_group: Sequence[float]) -> np.ndarray:
        """Per-group values -> per-coefficient vector."""
        return np.asarray(per_group, dtype=np.float64)[self.group_index]

    def with_modes(self, modes: Iterable[GroupMode]) -> 'PenaltyStructure':
        return PenaltyStructure(self.group_of, tuple(modes))

    def to_dict(self):
        return {
            'group_of': list(self.group_of),
            'modes': [m.to_dict() for m in self.modes],
        }

    # Constructors

    @classmethod
    def global_(cls, p: int, mode: Optional[GroupMode] = None) -> 'PenaltyStructure':
        return cls((0,) * p, (mode or GroupMode.estimated(),))

    @classmethod
    def local(cls, p: int, mode: Optional[GroupMode] = None) -> 'PenaltyStructure':
        mode = mode or GroupMode.estimated()
        return cls(tuple(range(p)), (mode,) * p)

    @classmethod
    def from_groups(cls, p: int, groups: Sequence[Sequence[int]],
                    modes: Optional[Sequence[GroupMode]] = None) -> 'PenaltyStructure':
        """
        Build from explicit member lists; every coefficient must be listed once.

        Args:
            p: Number of coefficients
            groups: One list of 0-based coefficient indices per group
            modes: Per-group modes (default: all estimated)
        """
        group_of = [-1] * p
        for g, members in enumerate(groups):
            for k in members:
                k = int(k)
                if k < 0 or k >= p:
                    raise DataValidationError(f"Covariate index {k} out of range for p={p}")
                if group_of[k] != -1:
                    raise DataValidationError(f"Covariate index {k} listed in more than one group")
                group_of[k] = g
        unassigned = [k for k, g in enumerate(group_of) if g == -1]
        if unassigned:
            raise DataValidationError(f"Covariate index(es) {unassigned} not assigned to a group")
        if modes is None:
            modes = [GroupMode.estimated()] * len(groups)
        if len(modes) != len(groups):
            raise DataValidationError(f"{len(modes)} modes given for {len(groups)} groups")
        return cls(tuple(group_of), tuple(modes))

    @classmethod
    def random_groups(cls, p: int, size: int, rng: np.random.Generator,
                      unpenalize_small: bool = False) -> 'PenaltyStructure':
        """
        Two groups: ``size`` covariates drawn without replacement form group 0,
        the rest group 1; group 0 is left unpenalized when ``unpenalize_small``.
        """
        if not 0 < size < p:
            raise DataValidationError(f"Random group size must lie in 1..{p - 1}; got {size}")
        chosen = set(int(k) for k in rng.choice(p, size=size, replace=False))
        group_of = tuple(0 if k in chosen else 1 for k in range(p))
        first = GroupMode.unpenalized() if unpenalize_small else GroupMode.estimated()
        return cls(group_of, (first, GroupMode.estimated()))
