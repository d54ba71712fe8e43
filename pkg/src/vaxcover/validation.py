"""Input validation helpers for the array-facing estimator API."""

from __future__ import annotations

import numpy as np

N_CELLS = 8


def check_count_table(X) -> np.ndarray:
    """Validate a cohort-by-cell count table.

    Accepts anything array-like of shape (n_cohorts, 8); a single
    8-vector is promoted to one row.  Entries must be finite and
    nonnegative.  Integer input keeps its integer dtype so that exact
    arithmetic downstream sees true integers.
    """
    X = np.asarray(X)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != N_CELLS:
        raise ValueError(
            f"expected a (n_cohorts, {N_CELLS}) count table, got shape {X.shape}"
        )
    if X.dtype.kind not in "iuf":
        X = X.astype(float)
    if X.dtype.kind == "f" and not np.all(np.isfinite(X)):
        raise ValueError("count table contains non-finite entries")
    if np.any(X < 0):
        raise ValueError("count table contains negative entries")
    return X


def count_rows(X):
    """Iterate a validated count table as tuples of python scalars."""
    for row in X:
        yield tuple(x.item() for x in row)
