"""
Multi-penalty ridge with penalties chosen by marginal likelihood.

Penalized objective, intercept unpenalized:

    RSS + sum_g lambda_g * sum_{k in g} beta_k^2

With beta_k ~ N(0, sigma2 / lambda_g(k)) integrated out and sigma2 profiled,
the restricted (REML) log marginal likelihood is, up to a constant,

    -1/2 [ (n - M) log P + log|X'X + S| - sum_k log s_k ]

where X is the intercept-augmented design, S = diag(0, s) the penalty
matrix, P the penalized RSS at the solution and M the number of
unpenalized coefficients (intercept included). The ML flavor replaces
n - M by n and the full log-determinant by that of the penalized block.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from django.conf import settings
from scipy import linalg, optimize

from core.data import Dataset
from core.exceptions import DataValidationError, EstimationError, PenaltyOptimizationError
from core.results import FitResult, augment
from core.structure import ESTIMATED, FIXED, PenaltyStructure


logger = logging.getLogger(__name__)

OPTIMIZERS = ('nelder-mead', 'grid', 'newton')
CRITERIA = ('reml', 'ml')

# Coarse common grid used to seed the local optimizer
START_GRID_POINTS = 25
JITTER_SEED = 7
JITTER_SCALE = 1.0
AT_BOUND = 1e-3


@dataclass(frozen=True)
class RidgeSpec:
    """
    Penalty structure plus optimizer settings.

    ``bounds`` is either one (lo, hi) pair on the log scale shared by all
    groups, or one pair per group.
    """

    structure: PenaltyStructure
    optimizer: str = 'nelder-mead'
    bounds: Optional[Sequence] = None
    tolerance: float = None
    criterion: str = 'reml'
    restarts: int = None
    max_iter: int = None
    grid_points: int = 41
    unconditional: bool = True
    method_tag: str = 'ridge'
    log_bounds: Tuple[Tuple[float, float], ...] = field(init=False, repr=False)

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise DataValidationError(f"Unknown optimizer '{self.optimizer}'; expected one of {OPTIMIZERS}")
        if self.criterion not in CRITERIA:
            raise DataValidationError(f"Unknown criterion '{self.criterion}'; expected one of {CRITERIA}")
        if self.tolerance is None:
            object.__setattr__(self, 'tolerance', getattr(settings, 'RIDGE_TOLERANCE', 1e-8))
        if self.restarts is None:
            object.__setattr__(self, 'restarts', getattr(settings, 'RIDGE_RESTARTS', 3))
        if self.max_iter is None:
            object.__setattr__(self, 'max_iter', getattr(settings, 'RIDGE_MAX_ITER', 2000))
        if not self.tolerance > 0:
            raise DataValidationError(f"Tolerance must be positive; got {self.tolerance}")
        if self.restarts < 1 or self.grid_points < 2:
            raise DataValidationError("Ridge optimizer needs restarts >= 1 and grid_points >= 2")

        G = self.structure.n_groups
        bounds = self.bounds
        if bounds is None:
            bounds = (getattr(settings, 'RIDGE_LOG_LAMBDA_LO', -10.0), getattr(settings, 'RIDGE_LOG_LAMBDA_HI', 14.0))
        bounds = np.asarray(bounds, dtype=np.float64)
        if bounds.shape == (2,):
            bounds = np.tile(bounds, (G, 1))
        if bounds.shape != (G, 2):
            raise DataValidationError(f"Expected one (lo, hi) pair or {G} pairs of log-lambda bounds")
        if np.any(bounds[:, 0] >= bounds[:, 1]):
            raise DataValidationError("Log-lambda bounds must satisfy lo < hi")
        object.__setattr__(self, 'log_bounds', tuple(tuple(b) for b in bounds.tolist()))

    def with_structure(self, structure: PenaltyStructure) -> 'RidgeSpec':
        return RidgeSpec(
            structure=structure, optimizer=self.optimizer, bounds=self.bounds,
            tolerance=self.tolerance, criterion=self.criterion, restarts=self.restarts,
            max_iter=self.max_iter, grid_points=self.grid_points,
            unconditional=self.unconditional, method_tag=self.method_tag,
        )


class RidgeSystem:
    """
    Penalized least squares for one dataset and penalty structure.

    Cross-products are formed once; every penalty evaluation is a Cholesky
    factorization of the (p+1) x (p+1) penalized Gram matrix.
    """

    def __init__(self, d: Dataset, structure: PenaltyStructure):
        if structure.p != d.p:
            raise DataValidationError(f"Penalty structure covers {structure.p} covariates; dataset has {d.p}")
        self.d = d
        self.structure = structure
        self.design = augment(d.X)
        self.gram = self.design.T @ self.design
        self.xty = self.design.T @ d.y
        self.estimated = structure.estimated_groups

    def lambdas(self, log_lambda_est: Sequence[float]) -> np.ndarray:
        """Natural-scale per-group penalties; non-estimated groups follow their mode."""
        lam = np.zeros(self.structure.n_groups)
        for g, mode in enumerate(self.structure.modes):
            if mode.kind == FIXED:
                lam[g] = mode.value
        lam[self.estimated] = np.exp(np.asarray(log_lambda_est, dtype=np.float64))
        return lam

    def penalty_diag(self, lam: np.ndarray) -> np.ndarray:
        return np.concatenate([[0.0], self.structure.expand(lam)])

    def solve(self, lam: np.ndarray):
        """
        Returns:
            (theta, Cholesky factor of X'X + S, penalized RSS, penalty diagonal)
        """
        s = self.penalty_diag(lam)
        A = self.gram + np.diag(s)
        try:
            factor = linalg.cho_factor(A, lower=True)
        except linalg.LinAlgError:
            raise EstimationError("Penalized Gram matrix is not positive definite (unpenalized columns collinear?)")
        theta = linalg.cho_solve(factor, self.xty)
        resid = self.d.y - self.design @ theta
        P = float(resid @ resid + theta @ (s * theta))
        return theta, factor, P, s

    def residual_df(self, s: np.ndarray, kind: str) -> int:
        if kind == 'ml':
            return self.d.n
        return self.d.n - int(np.count_nonzero(s == 0.0))

    def criterion(self, lam: np.ndarray, kind: str = 'reml') -> float:
        theta, factor, P, s = self.solve(lam)
        pen = s > 0.0
        P = max(P, np.finfo(np.float64).tiny)
        r = self.residual_df(s, kind)
        if kind == 'reml':
            logdet = 2.0 * np.sum(np.log(np.diag(factor[0])))
        else:
            if not pen.any():
                logdet = 0.0
            else:
                block = (self.gram + np.diag(s))[np.ix_(pen, pen)]
                logdet = 2.0 * np.sum(np.log(np.diag(linalg.cholesky(block, lower=True))))
        return -0.5 * (r * np.log(P) + logdet - np.sum(np.log(s[pen])))

    def sigma2(self, P: float, s: np.ndarray, kind: str) -> float:
        r = self.residual_df(s, kind)
        if r <= 0:
            raise EstimationError(f"No residual degrees of freedom (n={self.d.n})")
        return max(P / r, np.finfo(np.float64).tiny)


def ridge_criterion(d: Dataset, spec: RidgeSpec, log_lambda: Sequence[float]) -> float:
    """
    Profiled restricted (or ML) log marginal likelihood at ``log_lambda``.

    ``log_lambda`` holds one entry per group; entries of unpenalized and
    fixed groups are ignored in favour of their mode.
    """
    system = RidgeSystem(d, spec.structure)
    log_lambda = np.asarray(log_lambda, dtype=np.float64)
    if log_lambda.shape != (spec.structure.n_groups,):
        raise DataValidationError(f"Expected {spec.structure.n_groups} log-lambda values")
    return system.criterion(system.lambdas(log_lambda[system.estimated]), spec.criterion)


def fd_hessian(f: Callable[[np.ndarray], float], x: np.ndarray, h: float) -> np.ndarray:
    """Central finite-difference Hessian."""
    x = np.asarray(x, dtype=np.float64)
    k = x.shape[0]
    H = np.zeros((k, k))
    f0 = f(x)
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = h
        H[i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / h ** 2
        for j in range(i):
            ej = np.zeros(k)
            ej[j] = h
            H[i, j] = H[j, i] = (
                f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
            ) / (4.0 * h ** 2)
    return H


def fd_gradient(f: Callable[[np.ndarray], float], x: np.ndarray, h: float) -> np.ndarray:
    k = x.shape[0]
    grad = np.zeros(k)
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = h
        grad[i] = (f(x + ei) - f(x - ei)) / (2.0 * h)
    return grad


class PenaltyOptimizer:
    """Maximizes the marginal likelihood over the log penalties of estimated groups."""

    def __init__(self, system: RidgeSystem, spec: RidgeSpec):
        self.system = system
        self.spec = spec
        bounds = np.asarray(spec.log_bounds)[system.estimated]
        self.lo, self.hi = bounds[:, 0], bounds[:, 1]
        self.evaluations = 0

    def objective(self, rho: np.ndarray) -> float:
        self.evaluations += 1
        rho = np.clip(rho, self.lo, self.hi)
        return -self.system.criterion(self.system.lambdas(rho), self.spec.criterion)

    def optimize(self) -> Tuple[np.ndarray, float, dict]:
        if self.spec.optimizer == 'grid':
            rho, value = self._grid()
            info = {'starts': 0}
        elif self.spec.optimizer == 'newton':
            rho, value, info = self._newton(self._common_grid_start()[0])
        else:
            rho, value, info = self._nelder_mead()
        info['evaluations'] = self.evaluations
        return rho, -value, info

    def _common_grid_start(self) -> Tuple[np.ndarray, float]:
        best, best_value = None, np.inf
        for t in np.linspace(0.0, 1.0, START_GRID_POINTS):
            rho = self.lo + t * (self.hi - self.lo)
            value = self.objective(rho)
            if value < best_value:
                best, best_value = rho, value
        return best, best_value

    def _grid(self) -> Tuple[np.ndarray, float]:
        axes = [np.linspace(lo, hi, self.spec.grid_points) for lo, hi in zip(self.lo, self.hi)]
        mesh = np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, len(axes))
        values = np.array([self.objective(rho) for rho in mesh])
        best = int(np.argmin(values))
        return mesh[best], float(values[best])

    def _nelder_mead(self) -> Tuple[np.ndarray, float, dict]:
        start, start_value = self._common_grid_start()
        rng = np.random.default_rng(JITTER_SEED)
        starts = [start]
        for _ in range(self.spec.restarts - 1):
            jitter = rng.normal(0.0, JITTER_SCALE, size=start.shape)
            starts.append(np.clip(start + jitter, self.lo, self.hi))

        best, best_value = start, start_value
        converged_any = False
        tol = self.spec.tolerance
        for x0 in starts:
            res = optimize.minimize(
                self.objective, x0, method='Nelder-Mead',
                bounds=list(zip(self.lo, self.hi)),
                options={'xatol': tol, 'fatol': tol, 'maxiter': self.spec.max_iter,
                         'maxfev': 4 * self.spec.max_iter},
            )
            converged_any = converged_any or bool(res.success)
            if res.fun < best_value:
                best, best_value = np.clip(res.x, self.lo, self.hi), float(res.fun)

        if not converged_any:
            raise PenaltyOptimizationError(
                f"Nelder-Mead did not converge from {len(starts)} start(s)", best, -best_value,
            )
        return best, best_value, {'starts': len(starts)}

    def _newton(self, rho: np.ndarray) -> Tuple[np.ndarray, float, dict]:
        h = getattr(settings, 'FD_STEP', 1e-4)
        value = self.objective(rho)
        for it in range(1, self.spec.max_iter + 1):
            grad = fd_gradient(self.objective, rho, h)
            free = ~(((rho <= self.lo) & (grad > 0)) | ((rho >= self.hi) & (grad < 0)))
            if not free.any() or np.max(np.abs(grad[free])) < np.sqrt(self.spec.tolerance):
                return rho, value, {'iterations': it}
            H = fd_hessian(self.objective, rho, h)
            step = -grad
            try:
                Hf = H[np.ix_(free, free)]
                linalg.cholesky(Hf)
                step = np.zeros_like(rho)
                step[free] = -linalg.solve(Hf, grad[free], assume_a='pos')
            except linalg.LinAlgError:
                step[~free] = 0.0
            step = np.clip(step, -5.0, 5.0)
            t = 1.0
            while t > 1e-10:
                trial = np.clip(rho + t * step, self.lo, self.hi)
                trial_value = self.objective(trial)
                if trial_value <= value:
                    break
                t *= 0.5
            else:
                return rho, value, {'iterations': it}
            if np.max(np.abs(trial - rho)) < self.spec.tolerance:
                return trial, trial_value, {'iterations': it}
            rho, value = trial, trial_value
        raise PenaltyOptimizationError(
            f"Newton iterations hit the cap of {self.spec.max_iter}", rho, -value,
        )


def _at_bound(rho: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    return (rho - lo < AT_BOUND) | (hi - rho < AT_BOUND)


def fit_ridge_ml(d: Dataset, spec: RidgeSpec) -> FitResult:
    """
    Ridge regression with penalties estimated by marginal likelihood.

    Estimated groups are optimized on the log scale; fixed and unpenalized
    groups keep their mode. When ``spec.unconditional`` is set the
    penalty-uncertainty corrected covariance is attached as well.

    Raises:
        PenaltyOptimizationError: if the optimizer fails from every start
        EstimationError: if the penalized system is singular
    """
    system = RidgeSystem(d, spec.structure)
    details = {'criterion_kind': spec.criterion, 'optimizer': spec.optimizer}

    if system.estimated:
        optimizer = PenaltyOptimizer(system, spec)
        rho, value, info = optimizer.optimize()
        details.update(info)
        details['at_bound'] = _at_bound(rho, optimizer.lo, optimizer.hi).tolist()
    else:
        rho = np.zeros(0)
        value = None

    lam = system.lambdas(rho)
    theta, factor, P, s = system.solve(lam)
    sigma2 = system.sigma2(P, s, spec.criterion)
    cov = sigma2 * linalg.cho_solve(factor, np.eye(d.p + 1))
    cov = 0.5 * (cov + cov.T)
    if value is None and np.any(s > 0):
        value = system.criterion(lam, spec.criterion)
    details['criterion'] = value

    logger.debug(f"{spec.method_tag} on '{d.name}': log lambda={np.round(np.log(lam[lam > 0]), 3).tolist()}")
    fit = FitResult(
        intercept=theta[0],
        beta=theta[1:],
        sigma2=sigma2,
        lam=lam,
        method_tag=spec.method_tag,
        cov_theta=cov,
        structure=spec.structure,
        details=details,
    )
    if spec.unconditional:
        fit = correct_for_penalty_uncertainty(fit, d, spec)
    return fit


def _nearest_psd(M: np.ndarray) -> np.ndarray:
    M = 0.5 * (M + M.T)
    w, V = linalg.eigh(M)
    if w.min() >= 0.0:
        return M
    M = (V * np.clip(w, 0.0, None)) @ V.T
    return 0.5 * (M + M.T)


def correct_for_penalty_uncertainty(fit: FitResult, d: Dataset, spec: Optional[RidgeSpec] = None) -> FitResult:
    """
    Inflate the covariance for uncertainty in the estimated log penalties.

    cov_corrected = cov + J V J', with J the derivative of (intercept, beta)
    with respect to rho = log lambda of the estimated groups and V the inverse
    negative Hessian of the marginal likelihood in rho. Groups whose penalty
    sits at an optimizer bound are left out. A singular or indefinite Hessian
    falls back to the uncorrected covariance and sets ``correction_fallback``.
    """
    if fit.cov_theta is None or fit.structure is None:
        raise EstimationError(f"Fit '{fit.method_tag}' carries no covariance to correct")
    if spec is None:
        spec = RidgeSpec(structure=fit.structure, criterion=fit.details.get('criterion_kind', 'reml'),
                         unconditional=False, method_tag=fit.method_tag)

    system = RidgeSystem(d, fit.structure)
    estimated = system.estimated
    bounds = np.asarray(spec.log_bounds)[estimated]
    rho_hat = np.log(fit.lam[estimated]) if estimated else np.zeros(0)
    interior = ~_at_bound(rho_hat, bounds[:, 0], bounds[:, 1]) if estimated else np.zeros(0, dtype=bool)

    if not interior.any():
        return fit.evolve(cov_theta_corrected=fit.cov_theta, correction_fallback=False)

    free = np.flatnonzero(interior)

    def loglik(rho_free: np.ndarray) -> float:
        rho = rho_hat.copy()
        rho[free] = rho_free
        return system.criterion(system.lambdas(rho), spec.criterion)

    h = getattr(settings, 'FD_STEP', 1e-4)
    H = fd_hessian(loglik, rho_hat[free], h)
    try:
        V_rho = linalg.inv(-H)
        linalg.cholesky(0.5 * (V_rho + V_rho.T))
    except linalg.LinAlgError:
        logger.warning(f"{fit.method_tag} on '{d.name}': penalty Hessian not negative definite; using conditional covariance")
        return fit.evolve(cov_theta_corrected=fit.cov_theta, correction_fallback=True)

    lam = fit.lam
    theta, factor, _, _ = system.solve(lam)
    J = np.zeros((d.p + 1, free.shape[0]))
    for col, idx in enumerate(free):
        g = estimated[idx]
        members = system.structure.members(g) + 1
        dS_theta = np.zeros(d.p + 1)
        dS_theta[members] = lam[g] * theta[members]
        J[:, col] = -linalg.cho_solve(factor, dS_theta)

    corrected = _nearest_psd(fit.cov_theta + J @ V_rho @ J.T)
    return fit.evolve(cov_theta_corrected=corrected, correction_fallback=False)
