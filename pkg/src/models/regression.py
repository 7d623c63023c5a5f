"""Estimation inputs and regression results."""

from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.exceptions import InvalidParameterError

Z_95 = 1.959963984540054


@dataclass
class EstimationSpec:
    """A (possibly instrumented) weighted linear regression problem.

    Attributes:
        outcome: Outcome vector of length n (or n x B for stacked outcomes)
        regressors: n x k matrix of endogenous and exogenous columns
        regressor_names: Column names of regressors
        endogenous: Per-column flag marking endogenous regressors
        instruments: n x m matrix of excluded instruments
        instrument_names: Column names of instruments
        weights: Non-negative weights (default: ones)
        cluster_ids: Cluster labels for bootstrap inference
        include_intercept: Prepend a constant exogenous column
    """

    outcome: np.ndarray
    regressors: np.ndarray
    regressor_names: List[str]
    endogenous: List[bool] = field(default_factory=list)
    instruments: Optional[np.ndarray] = None
    instrument_names: List[str] = field(default_factory=list)
    weights: Optional[np.ndarray] = None
    cluster_ids: Optional[np.ndarray] = None
    include_intercept: bool = True

    def __post_init__(self):
        """Validate dimensions after initialization."""
        self.outcome = np.asarray(self.outcome, dtype=float)
        self.regressors = np.asarray(self.regressors, dtype=float)
        if self.regressors.ndim == 1:
            self.regressors = self.regressors.reshape(-1, 1)
        if self.instruments is not None:
            self.instruments = np.asarray(self.instruments, dtype=float)
            if self.instruments.ndim == 1:
                self.instruments = self.instruments.reshape(-1, 1)
        if not self.endogenous:
            self.endogenous = [False] * self.regressors.shape[1]
        self.validate()

    def validate(self):
        """Validate conformability and weights.

        Raises:
            InvalidParameterError: If shapes or weights are invalid
        """
        n = self.outcome.shape[0]
        if self.regressors.shape[0] != n:
            raise InvalidParameterError(
                f"regressors have {self.regressors.shape[0]} rows, outcome has {n}"
            )
        if len(self.regressor_names) != self.regressors.shape[1]:
            raise InvalidParameterError("regressor_names must name every regressor column")
        if len(self.endogenous) != self.regressors.shape[1]:
            raise InvalidParameterError("endogenous must flag every regressor column")
        if self.instruments is not None:
            if self.instruments.shape[0] != n:
                raise InvalidParameterError("instruments and outcome differ in length")
            if len(self.instrument_names) != self.instruments.shape[1]:
                raise InvalidParameterError("instrument_names must name every instrument column")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape[0] != n:
                raise InvalidParameterError("weights and outcome differ in length")
            if np.any(w < 0) or not np.all(np.isfinite(w)) or w.sum() <= 0:
                raise InvalidParameterError("weights must be finite, non-negative and sum > 0")
            self.weights = w
        if self.cluster_ids is not None and len(self.cluster_ids) != n:
            raise InvalidParameterError("cluster_ids and outcome differ in length")

    @property
    def n_obs(self) -> int:
        return int(self.outcome.shape[0])

    @property
    def names(self) -> List[str]:
        """Coefficient names in estimation order."""
        return (['const'] if self.include_intercept else []) + list(self.regressor_names)

    def design(self) -> np.ndarray:
        """Full regressor matrix including the intercept column."""
        if self.include_intercept:
            return np.column_stack([np.ones(self.n_obs), self.regressors])
        return self.regressors

    def endogenous_mask(self) -> np.ndarray:
        flags = ([False] if self.include_intercept else []) + list(self.endogenous)
        return np.array(flags, dtype=bool)

    def normalized_weights(self) -> np.ndarray:
        """Weights scaled to mean one."""
        if self.weights is None:
            return np.ones(self.n_obs)
        return self.weights / self.weights.mean()

    def with_outcome(self, outcome: np.ndarray) -> 'EstimationSpec':
        """Copy of this spec with a different outcome."""
        return replace(self, outcome=np.asarray(outcome, dtype=float))


@dataclass
class BootstrapResult:
    """Wild cluster bootstrap summary.

    Attributes:
        se: Replicate standard deviation per coefficient
        ci_low: 2.5th percentile per coefficient
        ci_high: 97.5th percentile per coefficient
        reps: Requested replications
        failed: Dropped replications
        draws: Successful replicate coefficients (reps x k)
    """

    se: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    reps: int
    failed: int
    draws: np.ndarray


@dataclass
class RegressionResult:
    """Coefficients with bootstrap (or analytic) inference.

    Attributes:
        names: Coefficient names
        coefficients: Point estimates
        covariance: Analytic covariance sigma^2 (X'WX)^-1
        se: Standard errors (bootstrap when reps > 0, else analytic)
        ci_low: Lower 95% bound (percentile when bootstrapped)
        ci_high: Upper 95% bound
        n_obs: Observations
        n_clusters: Distinct clusters
        estimator: 'wls' or 'tsls'
        first_stage_F: Joint F on excluded instruments (tsls only)
        weak_instrument: First stage F below the weak-instrument threshold
        bootstrap_reps: Successful bootstrap replications (0 = analytic)
        failed_reps: Dropped bootstrap replications
        residual_std: Weighted residual standard deviation
    """

    names: List[str]
    coefficients: np.ndarray
    covariance: np.ndarray
    se: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    n_obs: int
    n_clusters: int
    estimator: str = 'wls'
    first_stage_F: Optional[float] = None
    weak_instrument: bool = False
    bootstrap_reps: int = 0
    failed_reps: int = 0
    residual_std: float = 0.0

    def _index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"No coefficient named '{name}' (have {', '.join(self.names)})")

    def coef(self, name: str) -> float:
        return float(self.coefficients[self._index(name)])

    def se_of(self, name: str) -> float:
        return float(self.se[self._index(name)])

    def ci(self, name: str) -> Tuple[float, float]:
        """Percentile (or analytic) 95% interval."""
        i = self._index(name)
        return float(self.ci_low[i]), float(self.ci_high[i])

    def symmetric_ci(self, name: str) -> Tuple[float, float]:
        """Estimate plus/minus 1.96 standard errors."""
        b, s = self.coef(name), self.se_of(name)
        return b - Z_95 * s, b + Z_95 * s

    def negated(self) -> 'RegressionResult':
        """Same result for the negated outcome."""
        return replace(
            self,
            coefficients=-self.coefficients,
            ci_low=-self.ci_high,
            ci_high=-self.ci_low,
        )

    def summary(self, name: str) -> Dict[str, Any]:
        low, high = self.ci(name)
        return {
            'coefficient': self.coef(name),
            'se': self.se_of(name),
            'ci_low': low,
            'ci_high': high,
            'n': self.n_obs,
            'clusters': self.n_clusters,
        }


@dataclass
class ProbitResult:
    """Probit maximum likelihood estimates.

    Attributes:
        names: Coefficient names
        coefficients: Point estimates
        se: Standard errors from the inverse information matrix
        log_likelihood: Weighted log likelihood at the estimate
        iterations: Newton iterations used
        trace: Per-iteration (iteration, log likelihood, max |score|) tuples
    """

    names: List[str]
    coefficients: np.ndarray
    se: np.ndarray
    log_likelihood: float
    iterations: int
    trace: List[Tuple[int, float, float]] = field(default_factory=list)

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.names.index(name)])

    def se_of(self, name: str) -> float:
        return float(self.se[self.names.index(name)])


@dataclass(frozen=True)
class MillsValues:
    """Standard normal quantities at a latent index value."""

    pdf: float
    cdf: float
    mills: float
    mills_derivative: float
