"""Forward mixture model: from rates to expected antibody-status cells.

A cohort splits into a vaccinated fraction ``v`` and an unvaccinated
fraction ``1 - v``.  An unvaccinated child is seropositive to disease i
with the natural-exposure probability ``e[i]``; a vaccinated child with
probability ``q[i] = e[i] + (1 - e[i]) * s[i]`` where ``s[i]`` is the
seroconversion rate.  Statuses are independent across diseases within
each stratum, so the cell probabilities are a two-component product
mixture.

The arithmetic is generic: feed in fractions and the probabilities come
out exact, feed in floats and you get doubles.  Out-of-range parameters
are accepted on purpose (the cell probabilities remain well defined as
algebraic expressions, and diagnostic workflows re-substitute estimates
that fall slightly outside [0, 1]).
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .algebra import POSITIVE_CELLS


def _exact(x) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def _div(num, den):
    """Division that keeps int/Fraction operands exact."""
    if _exact(num) and _exact(den):
        return Fraction(num, 1) / Fraction(den, 1)
    return num / den


def _as_rate_triple(value, name: str) -> tuple:
    t = tuple(value)
    if len(t) != 3:
        raise ValueError(f"{name} must have 3 entries, got {len(t)}")
    for x in t:
        if not isinstance(x, numbers.Real):
            raise TypeError(f"{name} entries must be numbers, got {x!r}")
    return t


@dataclass(frozen=True)
class ModelParams:
    """Coverage ``v``, exposures ``e`` and seroconversions ``s`` (3 each)."""

    v: float | Fraction
    e: tuple
    s: tuple

    def __post_init__(self):
        object.__setattr__(self, "e", _as_rate_triple(self.e, "e"))
        object.__setattr__(self, "s", _as_rate_triple(self.s, "s"))

    @property
    def q(self) -> tuple:
        """Per-disease seropositivity rate conditional on vaccination."""
        return tuple(e + (1 - e) * s for e, s in zip(self.e, self.s))

    def swapped(self) -> "ModelParams":
        """The mirror parameter point: v -> 1-v and e <-> q.

        Produces the same cell probabilities (the mixture components
        trade places).  Where some q[i] equals 1 the mirrored
        seroconversion is undefined and comes back as NaN.
        """
        q = self.q
        s = tuple(
            _div(e - qi, 1 - qi) if (1 - qi) != 0 else math.nan
            for e, qi in zip(self.e, q)
        )
        return ModelParams(v=1 - self.v, e=q, s=s)

    def in_unit_range(self) -> bool:
        """True when all seven rates lie in [0, 1]."""
        return all(0 <= x <= 1 for x in (self.v, *self.e, *self.s))


def forward(params: ModelParams) -> tuple:
    """Cell probabilities p[0..7] of the mixture model.

    The 8 values sum to 1 identically, for any real parameter values.
    """
    v = params.v
    e = params.e
    q = params.q
    probs = []
    for k in range(8):
        vac = 1
        unvac = 1
        for i in range(3):
            if k in POSITIVE_CELLS[i + 1]:
                vac *= q[i]
                unvac *= e[i]
            else:
                vac *= 1 - q[i]
                unvac *= 1 - e[i]
        probs.append(v * vac + (1 - v) * unvac)
    return tuple(probs)


def expected_counts(params: ModelParams, n) -> tuple:
    """Expected cell counts ``n * forward(params)`` for a cohort of size n."""
    if n < 0:
        raise ValueError(f"cohort size must be nonnegative, got {n}")
    return tuple(n * p for p in forward(params))


def marginal_prevalence(params: ModelParams, disease: int) -> float | Fraction:
    """Overall seropositivity rate for one disease: v*q[i] + (1-v)*e[i]."""
    if disease not in (1, 2, 3):
        raise ValueError(f"disease index must be 1, 2 or 3, got {disease}")
    i = disease - 1
    return params.v * params.q[i] + (1 - params.v) * params.e[i]


def sample_cohort(params: ModelParams, n: int, seed: int) -> tuple[int, ...]:
    """Draw one synthetic cohort: multinomial(n, forward(params)).

    Deterministic: the stream is numpy's PCG64 initialized with ``seed``
    and the cohort is a single ``Generator.multinomial`` draw (numpy's
    conditional-binomial decomposition).  The same (params, n, seed)
    triple yields bit-identical counts on every run.
    """
    if not params.in_unit_range():
        raise ValueError("all parameters must lie in [0, 1] to sample")
    if n < 1:
        raise ValueError(f"cohort size must be >= 1, got {n}")
    p = np.array([float(x) for x in forward(params)], dtype=float)
    p /= p.sum()
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(int(n), p)
    return tuple(int(c) for c in counts)
