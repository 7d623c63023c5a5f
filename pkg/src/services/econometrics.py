"""Numerical estimation core.

Weighted least squares and two-stage least squares are solved through a QR
decomposition of the square-root-weighted design. Inference uses the wild
cluster bootstrap with Rademacher weights; every replication owns a
substream keyed by (seed, replication) so results do not depend on how the
replications are scheduled.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import linalg
from scipy.special import log_ndtr, ndtr
from scipy.stats import norm

from src.exceptions import (
    ConvergenceError,
    InferenceError,
    InvalidParameterError,
    SeparationError,
    ShockDecompException,
    SingularDesignError,
    UnderIdentifiedError,
)
from src.models.regression import (
    Z_95,
    BootstrapResult,
    EstimationSpec,
    MillsValues,
    ProbitResult,
    RegressionResult,
)

logger = logging.getLogger(__name__)

RANK_TOLERANCE = 1e-10
WEAK_INSTRUMENT_F = 10.0
MAX_FAILED_SHARE = 0.05
BOOTSTRAP_CHUNK = 50
PROBIT_TOLERANCE = 1e-10
PROBIT_MAX_ITER = 100
# SeedSequence spawn key of the bootstrap weights, apart from the simulator streams
BOOTSTRAP_STREAM = 4

Solver = Callable[[np.ndarray], np.ndarray]
Estimator = Union[str, Callable[[EstimationSpec], np.ndarray]]


class LinearSolver:
    """Weighted least squares solve for a fixed design and weights.

    The QR factorization is computed once so that many outcomes (bootstrap
    replications, stacked outcome columns) can be solved cheaply.
    """

    def __init__(self, design: np.ndarray, weights: np.ndarray, names: Sequence[str]):
        self.names = list(names)
        self.sqrt_w = np.sqrt(weights)
        weighted = design * self.sqrt_w[:, None]
        n, k = weighted.shape
        if n < k:
            raise SingularDesignError(
                f"Design has {n} observations for {k} columns", column=self.names[-1]
            )
        self.q, self.r = np.linalg.qr(weighted, mode='reduced')
        norms = np.linalg.norm(weighted, axis=0)
        diag = np.abs(np.diag(self.r))
        for j in range(k):
            if norms[j] == 0 or diag[j] <= RANK_TOLERANCE * norms[j]:
                raise SingularDesignError(
                    f"Design is rank deficient at column '{self.names[j]}'", column=self.names[j]
                )

    def solve(self, y: np.ndarray) -> np.ndarray:
        """Coefficients for outcome y (vector or n x B matrix)."""
        yw = y * self.sqrt_w if y.ndim == 1 else y * self.sqrt_w[:, None]
        return linalg.solve_triangular(self.r, self.q.T @ yw)

    def inverse_gram(self) -> np.ndarray:
        """(X'WX)^-1 from the triangular factor."""
        r_inv = linalg.solve_triangular(self.r, np.eye(self.r.shape[0]))
        return r_inv @ r_inv.T


def _weighted_rss(residuals: np.ndarray, weights: np.ndarray) -> float:
    return float(np.sum(weights * residuals * residuals))


def _cluster_count(spec: EstimationSpec) -> int:
    if spec.cluster_ids is None:
        return spec.n_obs
    return int(pd.Series(spec.cluster_ids).nunique())


# --- WLS ------------------------------------------------------------------------------


def prepare_wls(spec: EstimationSpec) -> Tuple[LinearSolver, np.ndarray]:
    """Solver and design of a weighted least squares problem."""
    design = spec.design()
    return LinearSolver(design, spec.normalized_weights(), spec.names), design


def wls_coefficients(spec: EstimationSpec) -> np.ndarray:
    solver, _ = prepare_wls(spec)
    return solver.solve(spec.outcome)


def wls(spec: EstimationSpec, reps: int = 0, seed: int = 0, workers: int = 1) -> RegressionResult:
    """Weighted least squares.

    Args:
        spec: Regression problem; endogeneity flags and instruments are ignored
        reps: Wild cluster bootstrap replications (0 = analytic inference only)
        seed: Bootstrap seed
        workers: Threads used for bootstrap replications

    Returns:
        RegressionResult

    Raises:
        SingularDesignError: If the weighted design is rank deficient
    """
    solver, design = prepare_wls(spec)
    coefficients = solver.solve(spec.outcome)
    weights = spec.normalized_weights()
    residuals = spec.outcome - design @ coefficients
    dof = max(spec.n_obs - design.shape[1], 1)
    sigma2 = _weighted_rss(residuals, weights) / dof
    covariance = sigma2 * solver.inverse_gram()
    result = _assemble(
        spec, coefficients, covariance, 'wls', math.sqrt(sigma2),
    )
    if reps > 0:
        boot = _bootstrap_with(spec, solver.solve, design, coefficients, reps, seed, workers)
        result = _attach_bootstrap(result, boot)
    return result


# --- 2SLS -----------------------------------------------------------------------------


def _first_stage(spec: EstimationSpec) -> Tuple[np.ndarray, Optional[float]]:
    """Replace endogenous columns by their first-stage fit.

    Returns:
        Tuple (fitted design, joint first-stage F; the smallest across
        endogenous regressors)
    """
    design = spec.design()
    mask = spec.endogenous_mask()
    n_endog = int(mask.sum())
    n_excluded = 0 if spec.instruments is None else spec.instruments.shape[1]
    if n_excluded < n_endog:
        raise UnderIdentifiedError(
            f"{n_excluded} excluded instruments for {n_endog} endogenous regressors"
        )
    if n_endog == 0:
        return design, None

    names = spec.names
    exog = design[:, ~mask]
    exog_names = [n for n, m in zip(names, mask) if not m]
    instruments = np.column_stack([spec.instruments, exog])
    weights = spec.normalized_weights()
    z_solver = LinearSolver(instruments, weights, list(spec.instrument_names) + exog_names)

    endog = design[:, mask]
    fitted = instruments @ z_solver.solve(endog)
    fitted_design = design.copy()
    fitted_design[:, mask] = fitted

    restricted = LinearSolver(exog, weights, exog_names) if exog.shape[1] else None
    df_unrestricted = spec.n_obs - instruments.shape[1]
    stats: List[float] = []
    for j in range(n_endog):
        x = endog[:, j]
        rss_u = _weighted_rss(x - fitted[:, j], weights)
        if restricted is not None:
            rss_r = _weighted_rss(x - exog @ restricted.solve(x), weights)
        else:
            rss_r = _weighted_rss(x, weights)
        if df_unrestricted <= 0:
            stats.append(float('nan'))
        elif rss_u <= 1e-300:
            stats.append(float('inf'))
        else:
            stats.append(((rss_r - rss_u) / n_excluded) / (rss_u / df_unrestricted))
    return fitted_design, min(stats)


def prepare_tsls(spec: EstimationSpec) -> Tuple[LinearSolver, np.ndarray, Optional[float]]:
    """Second-stage solver, original design and first-stage F."""
    fitted_design, first_stage_f = _first_stage(spec)
    solver = LinearSolver(fitted_design, spec.normalized_weights(), spec.names)
    return solver, spec.design(), first_stage_f


def tsls_coefficients(spec: EstimationSpec) -> np.ndarray:
    solver, _, _ = prepare_tsls(spec)
    return solver.solve(spec.outcome)


def tsls(spec: EstimationSpec, reps: int = 0, seed: int = 0, workers: int = 1) -> RegressionResult:
    """Weighted two-stage least squares with a joint first-stage F test.

    Args:
        spec: Regression problem with endogenous flags and excluded instruments
        reps: Wild cluster bootstrap replications (0 = analytic inference only)
        seed: Bootstrap seed
        workers: Threads used for bootstrap replications

    Returns:
        RegressionResult with first_stage_F and weak_instrument set

    Raises:
        UnderIdentifiedError: If there are fewer excluded instruments than
            endogenous regressors
        SingularDesignError: If either stage is rank deficient
    """
    solver, design, first_stage_f = prepare_tsls(spec)
    coefficients = solver.solve(spec.outcome)
    weights = spec.normalized_weights()
    residuals = spec.outcome - design @ coefficients
    dof = max(spec.n_obs - design.shape[1], 1)
    sigma2 = _weighted_rss(residuals, weights) / dof
    covariance = sigma2 * solver.inverse_gram()

    weak = first_stage_f is not None and not (first_stage_f >= WEAK_INSTRUMENT_F)
    if weak:
        if first_stage_f is not None and first_stage_f < 1:
            logger.warning(f"Very weak first stage: F = {first_stage_f:.3f} < 1")
        else:
            logger.warning(f"Weak first stage: F = {first_stage_f:.2f} < {WEAK_INSTRUMENT_F:g}")

    result = _assemble(spec, coefficients, covariance, 'tsls', math.sqrt(sigma2))
    result.first_stage_F = first_stage_f
    result.weak_instrument = weak
    if reps > 0:
        boot = _bootstrap_with(spec, solver.solve, design, coefficients, reps, seed, workers)
        result = _attach_bootstrap(result, boot)
    return result


def _assemble(
    spec: EstimationSpec,
    coefficients: np.ndarray,
    covariance: np.ndarray,
    estimator: str,
    residual_std: float,
) -> RegressionResult:
    se = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
    return RegressionResult(
        names=spec.names,
        coefficients=coefficients,
        covariance=covariance,
        se=se,
        ci_low=coefficients - Z_95 * se,
        ci_high=coefficients + Z_95 * se,
        n_obs=spec.n_obs,
        n_clusters=_cluster_count(spec),
        estimator=estimator,
        residual_std=residual_std,
    )


def _attach_bootstrap(result: RegressionResult, boot: BootstrapResult) -> RegressionResult:
    result.se = boot.se
    result.ci_low = boot.ci_low
    result.ci_high = boot.ci_high
    result.bootstrap_reps = boot.reps - boot.failed
    result.failed_reps = boot.failed
    return result


# --- Wild cluster bootstrap -----------------------------------------------------------


def _rademacher(seed: int, rep: int, n_clusters: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(BOOTSTRAP_STREAM, rep)))
    return rng.integers(0, 2, size=n_clusters) * 2.0 - 1.0


def _bootstrap_with(
    spec: EstimationSpec,
    solve: Solver,
    design: np.ndarray,
    coefficients: np.ndarray,
    reps: int,
    seed: int,
    workers: int,
    per_replication: bool = False,
) -> BootstrapResult:
    """Run replications given a solver mapping outcomes (n or n x B) to coefficients."""
    if reps < 1:
        raise InvalidParameterError(f"reps must be positive, got {reps}")
    clusters = spec.cluster_ids if spec.cluster_ids is not None else np.arange(spec.n_obs)
    codes, uniques = pd.factorize(np.asarray(clusters), sort=False)
    n_clusters = len(uniques)
    if n_clusters < 2:
        raise InferenceError(f"Wild cluster bootstrap needs >= 2 clusters, got {n_clusters}")

    fitted = design @ coefficients
    residuals = spec.outcome - fitted
    k = coefficients.shape[0]

    def run_chunk(chunk: range) -> np.ndarray:
        signs = np.column_stack([_rademacher(seed, rep, n_clusters) for rep in chunk])
        outcomes = fitted[:, None] + residuals[:, None] * signs[codes, :]
        if not per_replication:
            try:
                return np.asarray(solve(outcomes)).T
            except (ShockDecompException, np.linalg.LinAlgError, ValueError) as e:
                logger.debug(f"Bootstrap chunk starting at {chunk.start} failed: {e}")
                return np.full((len(chunk), k), np.nan)
        draws = np.full((len(chunk), k), np.nan)
        for i in range(len(chunk)):
            try:
                draws[i] = solve(outcomes[:, i])
            except (ShockDecompException, np.linalg.LinAlgError, ValueError) as e:
                logger.debug(f"Bootstrap replication {chunk.start + i} failed: {e}")
        return draws

    chunks = [range(s, min(s + BOOTSTRAP_CHUNK, reps)) for s in range(0, reps, BOOTSTRAP_CHUNK)]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_chunk, chunks))
    else:
        parts = [run_chunk(c) for c in chunks]
    draws = np.vstack(parts)

    ok = np.all(np.isfinite(draws), axis=1)
    failed = int((~ok).sum())
    if failed:
        logger.warning(f"Dropped {failed} of {reps} bootstrap replications")
    if failed > MAX_FAILED_SHARE * reps:
        raise InferenceError(
            f"{failed} of {reps} bootstrap replications failed (limit {MAX_FAILED_SHARE:.0%})"
        )
    good = draws[ok]
    se = good.std(axis=0, ddof=1) if good.shape[0] > 1 else np.zeros(k)
    low, high = np.percentile(good, [2.5, 97.5], axis=0)
    logger.debug(f"Bootstrap finished: {good.shape[0]} replications, {n_clusters} clusters")
    return BootstrapResult(se=se, ci_low=low, ci_high=high, reps=reps, failed=failed, draws=good)


def wild_cluster_bootstrap(
    spec: EstimationSpec,
    estimator: Estimator = 'wls',
    reps: int = 500,
    seed: int = 0,
    workers: int = 1,
) -> BootstrapResult:
    """Wild cluster bootstrap with Rademacher weights on unrestricted residuals.

    Args:
        spec: Regression problem; cluster_ids define the resampling clusters
            (each observation is its own cluster when absent)
        estimator: 'wls', 'tsls', or a callable mapping a spec to coefficients
        reps: Replications
        seed: Seed; replication r uses
            SeedSequence(seed, spawn_key=(BOOTSTRAP_STREAM, r))
        workers: Threads

    Returns:
        BootstrapResult

    Raises:
        InferenceError: With fewer than two clusters or more than 5% failed
            replications
    """
    if estimator == 'wls':
        solver, design = prepare_wls(spec)
        return _bootstrap_with(
            spec, solver.solve, design, solver.solve(spec.outcome), reps, seed, workers
        )
    if estimator == 'tsls':
        solver, design, _ = prepare_tsls(spec)
        return _bootstrap_with(
            spec, solver.solve, design, solver.solve(spec.outcome), reps, seed, workers
        )
    if not callable(estimator):
        raise InvalidParameterError(f"Unknown estimator: {estimator}")
    fn = estimator
    return _bootstrap_with(
        spec,
        lambda y: fn(spec.with_outcome(y)),
        spec.design(),
        np.asarray(fn(spec)),
        reps,
        seed,
        workers,
        per_replication=True,
    )


# --- Gaussian utilities ---------------------------------------------------------------


def _mills(x: np.ndarray) -> np.ndarray:
    """Inverse Mills ratio pdf(x)/cdf(x), evaluated in log space."""
    return np.exp(norm.logpdf(x) - log_ndtr(x))


def gaussian_mills(pi: float) -> MillsValues:
    """Standard normal pdf, cdf, inverse Mills ratio and its derivative at pi.

    Raises:
        InvalidParameterError: If pi is not finite
    """
    if not math.isfinite(pi):
        raise InvalidParameterError(f"pi must be finite, got {pi}")
    mills = float(_mills(np.array(pi)))
    return MillsValues(
        pdf=float(norm.pdf(pi)),
        cdf=float(ndtr(pi)),
        mills=mills,
        mills_derivative=-mills * (pi + mills),
    )


def normal_quantile(p: float) -> float:
    """Standard normal quantile function."""
    if not (0.0 < p < 1.0):
        raise InvalidParameterError(f"p must be in (0, 1), got {p}")
    return float(norm.ppf(p))


# --- Probit ---------------------------------------------------------------------------


def _probit_loglik(y: np.ndarray, index: np.ndarray, w: np.ndarray) -> float:
    return float(np.sum(w * np.where(y == 1, log_ndtr(index), log_ndtr(-index))))


def probit_mle(
    y: np.ndarray,
    X: np.ndarray,
    weights: Optional[np.ndarray] = None,
    names: Optional[Sequence[str]] = None,
    max_iter: int = PROBIT_MAX_ITER,
    tol: float = PROBIT_TOLERANCE,
) -> ProbitResult:
    """Probit maximum likelihood by Newton-Raphson with step halving.

    Convergence is judged on the weighted mean score, so the same tol applies
    to any sample size or weight scale. trace rows are (iteration, loglik,
    mean score max-norm).

    Args:
        y: Binary outcome
        X: Regressor matrix (include a constant column explicitly)
        weights: Optional non-negative observation weights
        names: Coefficient names
        max_iter: Iteration limit
        tol: Convergence threshold on the max-norm of the score divided by
            the weight total

    Returns:
        ProbitResult

    Raises:
        SeparationError: If coefficients diverge under perfect separation
        ConvergenceError: If the iteration limit is reached
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if not np.all((y == 0) | (y == 1)):
        raise InvalidParameterError("Probit outcome must be binary")
    n, k = X.shape
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    names = list(names) if names is not None else [f"x{j}" for j in range(k)]
    total = w.sum()

    beta = np.zeros(k)
    index = X @ beta
    loglik = _probit_loglik(y, index, w)
    trace: List[Tuple[int, float, float]] = []
    sign = 2.0 * y - 1.0

    for iteration in range(1, max_iter + 1):
        # Generalized residual: d loglik_i / d index_i
        g = sign * _mills(sign * index)
        score = X.T @ (w * g)
        score_norm = float(np.max(np.abs(score))) / total
        trace.append((iteration - 1, loglik, score_norm))
        if score_norm < tol:
            break
        curvature = w * g * (g + index)
        information = (X * curvature[:, None]).T @ X
        try:
            step = linalg.solve(information, score, assume_a='pos')
        except (np.linalg.LinAlgError, ValueError) as e:
            raise SeparationError(f"Probit information matrix is singular: {e}")

        alpha = 1.0
        for _ in range(30):
            candidate = beta + alpha * step
            cand_index = X @ candidate
            cand_loglik = _probit_loglik(y, cand_index, w)
            if np.isfinite(cand_loglik) and cand_loglik >= loglik - 1e-12 * abs(loglik):
                break
            alpha *= 0.5
        beta, index, loglik = candidate, cand_index, cand_loglik

        if not np.all(np.isfinite(beta)):
            raise SeparationError("Probit coefficients diverged")
        if iteration >= 5 and np.all(sign * index > 0) and loglik > -1e-6 * total:
            raise SeparationError(
                f"Perfect separation: all observations classified correctly at iteration "
                f"{iteration}"
            )
    else:
        logger.error(f"Probit did not converge in {max_iter} iterations")
        raise ConvergenceError(f"Probit did not converge in {max_iter} iterations", trace=trace)

    g = sign * _mills(sign * index)
    information = (X * (w * g * (g + index))[:, None]).T @ X
    covariance = linalg.inv(information)
    se = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
    iterations = trace[-1][0]
    logger.debug(f"Probit converged after {iterations} iterations, loglik={loglik:.4f}")
    return ProbitResult(
        names=names,
        coefficients=beta,
        se=se,
        log_likelihood=loglik,
        iterations=iterations,
        trace=trace,
    )
