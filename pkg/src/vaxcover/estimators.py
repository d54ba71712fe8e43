"""Scikit-learn style estimators over cohort count tables.

Both classes consume an (n_cohorts, 8) array of antibody-status counts,
one row per cohort, and estimate the seven rates per row.  They follow
the sklearn contract (hyperparameters in ``__init__``, ``fit`` storing
trailing-underscore attributes and returning ``self``, ``get_params`` /
``set_params`` / ``clone`` support) so they compose with pipelines and
model-selection tooling.  ``transform`` maps count rows to the (n, 7)
rate matrix ``[coverage, e1, e2, e3, s1, s2, s3]``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .inversion import EstimationError, estimate
from .mle import FitConfig, fit_counts
from .validation import check_count_table, count_rows

RATE_NAMES = (
    "coverage",
    "exposure_1",
    "exposure_2",
    "exposure_3",
    "seroconversion_1",
    "seroconversion_2",
    "seroconversion_3",
)


def _params_row(params) -> list[float]:
    return [float(params.v), *map(float, params.e), *map(float, params.s)]


class CoverageEstimator(BaseEstimator, TransformerMixin):
    """Exact closed-form per-cohort estimator.

    Parameters
    ----------
    on_error : {"nan", "raise"}
        What to do with cohorts whose count table is degenerate for the
        closed form (zero total, nonpositive hyperdeterminant, singular
        marginal).  "nan" records the error and emits a NaN row.

    Attributes (after ``fit``)
    --------------------------
    coverage_ : (n,) array of vaccine-coverage estimates
    exposure_, seroconversion_, q_ : (n, 3) arrays of per-disease rates
    levels_ : list of validity levels ("fully_valid", "coverage_only",
        "degenerate"), or None for errored rows
    results_ : list of :class:`~vaxcover.inversion.EstimateResult` or None
    errors_ : list of error codes (None where estimation succeeded)
    """

    def __init__(self, on_error: str = "nan"):
        self.on_error = on_error

    def _check_on_error(self):
        if self.on_error not in ("nan", "raise"):
            raise ValueError(
                f"on_error must be 'nan' or 'raise', got {self.on_error!r}"
            )

    def fit(self, X, y=None):
        self._check_on_error()
        X = check_count_table(X)
        n = X.shape[0]
        results = []
        errors = []
        for counts in count_rows(X):
            try:
                results.append(estimate(counts))
                errors.append(None)
            except EstimationError as exc:
                if self.on_error == "raise":
                    raise
                results.append(None)
                errors.append(exc.code)
        self.results_ = results
        self.errors_ = errors
        self.coverage_ = np.full(n, np.nan)
        self.exposure_ = np.full((n, 3), np.nan)
        self.seroconversion_ = np.full((n, 3), np.nan)
        self.q_ = np.full((n, 3), np.nan)
        self.levels_ = []
        for i, res in enumerate(results):
            if res is None:
                self.levels_.append(None)
                continue
            self.coverage_[i] = res.params.v
            self.exposure_[i] = res.params.e
            self.seroconversion_[i] = res.params.s
            self.q_[i] = res.q
            self.levels_.append(res.validity.level.value)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        """Rate matrix [v, e1..e3, s1..s3] for each count row."""
        self._check_on_error()
        X = check_count_table(X)
        out = np.full((X.shape[0], 7), np.nan)
        for i, counts in enumerate(count_rows(X)):
            try:
                res = estimate(counts)
            except EstimationError:
                if self.on_error == "raise":
                    raise
                continue
            out[i] = _params_row(res.params)
        return out

    def get_feature_names_out(self, input_features=None):
        return np.asarray(RATE_NAMES, dtype=object)


class MLECoverageEstimator(BaseEstimator, TransformerMixin):
    """Numerical maximum-likelihood counterpart of :class:`CoverageEstimator`.

    Hyperparameters mirror :class:`~vaxcover.mle.FitConfig`.  Estimates
    are box-constrained to [0, 1] by construction, which is exactly what
    makes this a useful cross-check: where the closed form reports an
    out-of-range rate, this estimator shows the nearest in-range fit.

    Attributes (after ``fit``): ``coverage_``, ``exposure_``,
    ``seroconversion_`` as above, plus per-cohort ``objective_`` values
    and ``converged_`` flags.
    """

    def __init__(self, objective: str = "loglik", max_iterations: int = 5000,
                 tolerance: float = 1e-12, restarts: int = 8, seed: int = 0):
        self.objective = objective
        self.max_iterations = max_iterations
        self.tolerance = tolerance
        self.restarts = restarts
        self.seed = seed

    def _config(self) -> FitConfig:
        return FitConfig(
            objective=self.objective,
            max_iterations=self.max_iterations,
            tolerance=self.tolerance,
            restarts=self.restarts,
            seed=self.seed,
        )

    def fit(self, X, y=None):
        config = self._config()
        X = check_count_table(X)
        n = X.shape[0]
        self.coverage_ = np.full(n, np.nan)
        self.exposure_ = np.full((n, 3), np.nan)
        self.seroconversion_ = np.full((n, 3), np.nan)
        self.objective_ = np.full(n, np.nan)
        self.converged_ = np.zeros(n, dtype=bool)
        for i, counts in enumerate(count_rows(X)):
            res = fit_counts(counts, config)
            self.coverage_[i] = res.params.v
            self.exposure_[i] = res.params.e
            self.seroconversion_[i] = res.params.s
            self.objective_[i] = res.objective
            self.converged_[i] = res.converged
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        """Rate matrix [v, e1..e3, s1..s3] for each count row."""
        config = self._config()
        X = check_count_table(X)
        out = np.empty((X.shape[0], 7))
        for i, counts in enumerate(count_rows(X)):
            out[i] = _params_row(fit_counts(counts, config).params)
        return out

    def get_feature_names_out(self, input_features=None):
        return np.asarray(RATE_NAMES, dtype=object)
