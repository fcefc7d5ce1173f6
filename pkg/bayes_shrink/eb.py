"""Empirical-Bayes penalty for the fixed-lambda prior."""
import logging

from core.data import Dataset
from core.structure import PenaltyStructure
from freq_linear.ridge import RidgeSpec, fit_ridge_ml


logger = logging.getLogger(__name__)


def estimate_lambda_eb(d: Dataset) -> float:
    """Marginal-likelihood estimate of a single global lambda."""
    spec = RidgeSpec(structure=PenaltyStructure.global_(d.p), unconditional=False, method_tag='eb')
    lam = float(fit_ridge_ml(d, spec).lam[0])
    logger.debug(f"EB lambda on '{d.name}': {lam:.4g}")
    return lam
