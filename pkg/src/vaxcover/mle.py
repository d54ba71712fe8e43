"""Numerical fit of the mixture model to observed counts.

This is the generic alternative the closed form replaces: pick the seven
rates that optimize a fit criterion between predicted and observed
cells.  It stays in the package as an independent cross-check oracle and
as a fallback for cohorts whose count table is degenerate for the exact
inversion.

The search is a derivative-free simplex descent (Nelder-Mead) run from
several seeded random starts.  Box constraints are enforced by
reflecting proposals at the [0, 1] boundary: the simplex moves in an
unconstrained space that is folded onto the box by a triangle wave, so
every evaluated parameter vector is feasible.  Everything is
deterministic for a fixed config.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .algebra import as_count_vector
from .inversion import EmptyCohort
from .model import ModelParams

OBJECTIVES = ("loglik", "sumsq")


class NonConvergenceWarning(RuntimeWarning):
    """No restart met the tolerance within the iteration budget."""


@dataclass(frozen=True)
class FitConfig:
    """Search settings.

    objective
        "loglik" minimizes the negative multinomial log-likelihood,
        "sumsq" the sum of squared count errors.
    tolerance
        objective-improvement stopping threshold of a single descent.
    restarts
        number of seeded random starting points.
    """

    objective: str = "loglik"
    max_iterations: int = 5000
    tolerance: float = 1e-12
    restarts: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ValueError(
                f"objective must be one of {OBJECTIVES}, got {self.objective!r}"
            )
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class FitResult:
    """Best parameters found, the objective value there, and convergence."""

    params: ModelParams
    objective: float
    converged: bool


def _fold_unit(x: np.ndarray) -> np.ndarray:
    """Reflect an unconstrained vector into [0, 1] (triangle wave)."""
    return 1.0 - np.abs(1.0 - np.mod(x, 2.0))


def _cell_probs(x: np.ndarray) -> np.ndarray:
    v = x[0]
    e = x[1:4]
    s = x[4:7]
    q = e + (1.0 - e) * s
    p = np.empty(8)
    for k in range(8):
        vac = unvac = 1.0
        for i in range(3):
            if k & (4 >> i):
                vac *= q[i]
                unvac *= e[i]
            else:
                vac *= 1.0 - q[i]
                unvac *= 1.0 - e[i]
        p[k] = v * vac + (1.0 - v) * unvac
    return p


def _make_raw_loss(counts: np.ndarray, objective: str):
    """Objective as a function of a feasible parameter vector."""
    n = counts.sum()
    observed = counts > 0
    if objective == "loglik":

        def raw_loss(x):
            p = _cell_probs(x)
            if np.any(p[observed] <= 0.0):
                return math.inf
            return -float(np.dot(counts[observed], np.log(p[observed])))

    else:

        def raw_loss(x):
            p = _cell_probs(x)
            return float(np.sum((n * p - counts) ** 2))

    return raw_loss


def _make_loss(counts: np.ndarray, objective: str):
    """Objective over the unconstrained search space (folded into the box)."""
    raw_loss = _make_raw_loss(counts, objective)
    return lambda x: raw_loss(_fold_unit(x))


def fit_counts(a, config: FitConfig | None = None) -> FitResult:
    """Fit the mixture model to one cohort's counts.

    Runs ``config.restarts`` Nelder-Mead descents from seeded uniform
    starting points, keeps the best (ties broken by lowest restart
    index), and polishes it with one more descent.  The returned
    parameters always lie in [0, 1].  If no descent met the tolerance
    the result is still returned, flagged ``converged=False`` and with a
    :class:`NonConvergenceWarning`.
    """
    if config is None:
        config = FitConfig()
    cells = as_count_vector(a)
    if sum(cells) == 0:
        raise EmptyCohort("all counts are zero")
    counts = np.array([float(c) for c in cells])

    loss = _make_loss(counts, config.objective)
    options = {
        "maxiter": config.max_iterations,
        "fatol": config.tolerance,
        "xatol": 1e-8,
        "adaptive": True,
    }
    rng = np.random.default_rng(config.seed)
    starts = rng.uniform(0.05, 0.95, size=(config.restarts, 7))

    best = None
    converged = False
    for x0 in starts:
        res = minimize(loss, x0, method="Nelder-Mead", options=options)
        converged = converged or bool(res.success)
        if best is None or res.fun < best.fun:
            best = res
    polish = minimize(loss, best.x, method="Nelder-Mead", options=options)
    converged = converged or bool(polish.success)
    if polish.fun < best.fun:
        best = polish

    if not converged:
        warnings.warn(
            "no restart met the tolerance within the iteration budget",
            NonConvergenceWarning,
            stacklevel=2,
        )
    x = _fold_unit(best.x)
    params = ModelParams(v=float(x[0]), e=tuple(map(float, x[1:4])),
                         s=tuple(map(float, x[4:7])))
    return FitResult(params=params, objective=float(best.fun), converged=converged)


def objective_value(a, params: ModelParams, objective: str = "loglik") -> float:
    """Evaluate a fit objective at given parameters (for comparisons).

    Unlike the search itself, the parameters are evaluated as given,
    without folding into [0, 1].
    """
    cells = as_count_vector(a)
    counts = np.array([float(c) for c in cells])
    raw_loss = _make_raw_loss(counts, objective)
    x = np.array([float(params.v), *map(float, params.e), *map(float, params.s)])
    return raw_loss(x)
