"""Closed-form inversion of the forward mixture model.

Given one cohort's 8 observed counts, the seven rates (coverage, three
exposures, three seroconversions) satisfy quadratic eliminant equations
whose coefficients are the exact invariants from :mod:`.algebra` and
whose shared discriminant is the hyperdeterminant.  When the
hyperdeterminant is positive and no marginal determinant vanishes the
count table has exactly two real parameter solutions, mirror images of
each other (v <-> 1-v, e <-> q).  The canonical solution is the one with
q >= e wherever the marginal determinants are positive, i.e. the one
with nonnegative seroconversion.

Validity gating is three-level.  The strong per-disease gate

    marginal_det >= sqrt(hyperdet) + |layer_diff|    (and hyperdet > 0)

holds if and only if every canonical rate lies in [0, 1] ("fully
valid").  If only hyperdet > 0 and all marginal determinants are
positive, the coverage estimate alone is trustworthy ("coverage only").
Everything else is "degenerate".  Gate comparisons and all range flags
are decided in exact arithmetic -- several real cohorts sit exactly on a
gate boundary, where floating point would misclassify.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .algebra import InvariantSet, as_count_vector, invariants
from .model import ModelParams, forward


class EstimationError(Exception):
    """Base class for conditions that leave the inversion undefined."""

    code = "estimation-error"


class EmptyCohort(EstimationError):
    """The counts sum to zero; there is nothing to estimate."""

    code = "empty-cohort"


class DegenerateDiscriminant(EstimationError):
    """Hyperdeterminant <= 0: the system has no two-solution structure.

    The count table then admits either no real solution or infinitely
    many, so no point estimate is returned.
    """

    code = "degenerate-discriminant"


class SingularLayer(EstimationError):
    """Some marginal determinant is exactly zero; eliminants collapse."""

    code = "singular-layer"


class SeroconversionUndefined(EstimationError):
    """An exposure estimate equals 1, making s = 0/0 for that disease."""

    code = "seroconversion-undefined"


class ValidityLevel(str, Enum):
    FULLY_VALID = "fully_valid"
    COVERAGE_ONLY = "coverage_only"
    DEGENERATE = "degenerate"

    def __str__(self) -> str:  # render as the bare value in reports
        return self.value


@dataclass(frozen=True)
class ValidityReport:
    """Exact gate flags plus the derived quality level for one cohort."""

    f4_positive: bool
    f1_positive: bool
    f2_positive: tuple[bool, bool, bool]
    strong_gate: tuple[bool, bool, bool]
    v_in_range: bool
    e_in_range: tuple[bool, bool, bool]
    s_in_range: tuple[bool, bool, bool]
    level: ValidityLevel


@dataclass(frozen=True)
class EstimateResult:
    """Canonical estimates, their mirror solution and the validity gates.

    ``s_defined`` / ``mirror_s_defined`` flag the rare exact boundary
    where an exposure equals 1 and the corresponding seroconversion is
    0/0; the undefined component is reported as NaN, never silently
    propagated into downstream math.
    """

    params: ModelParams
    q: tuple[float, float, float]
    mirror: ModelParams
    validity: ValidityReport
    invariants: InvariantSet
    s_defined: tuple[bool, bool, bool] = (True, True, True)
    mirror_s_defined: tuple[bool, bool, bool] = (True, True, True)


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def _sign_plus_root(p, q, d) -> int:
    """Exact sign of p + q*sqrt(d) for rational p, q and rational d >= 0."""
    if d < 0:
        raise ValueError("radicand must be nonnegative")
    if d == 0 or q == 0:
        return _sign(p)
    if p == 0:
        return _sign(q)
    sp, sq = _sign(p), _sign(q)
    if sp == sq:
        return sp
    return _sign(p * p - q * q * d) * sp


def check_validity(inv: InvariantSet) -> ValidityReport:
    """Evaluate all gate flags for one cohort's invariants.

    Every comparison, including the in-range flags of the canonical
    solution, is carried out exactly (square roots are eliminated by
    squaring), so boundary cohorts classify deterministically.
    """
    h = inv.hyperdet
    f4_positive = h > 0
    f1_positive = inv.total > 0
    f2_positive = tuple(m > 0 for m in inv.marginal_dets)

    strong = []
    e_in = []
    s_in = []
    for m, g in zip(inv.marginal_dets, inv.layer_diffs):
        if h < 0 or m == 0:
            strong.append(False)
            e_in.append(False)
            s_in.append(False)
            continue
        margin = m - abs(g)
        strong.append(margin >= 0 and margin * margin >= h)
        sm = _sign(m)
        # e = (m + g - sqrt(h)) / (2m):  0 <= e  and  e <= 1
        lower = _sign_plus_root(m + g, -1, h) * sm >= 0
        upper = _sign_plus_root(g - m, -1, h) * sm <= 0
        e_in.append(lower and upper)
        # s = 2*sqrt(h) / (m - g + sqrt(h))
        den_sign = _sign_plus_root(m - g, 1, h)
        if h == 0:
            s_in.append(den_sign != 0)
        else:
            s_in.append(den_sign > 0 and _sign_plus_root(m - g, -1, h) >= 0)

    v_in_range = bool(
        f4_positive and f1_positive and inv.cubic**2 <= inv.total**2 * h
    )
    if f4_positive and all(strong):
        level = ValidityLevel.FULLY_VALID
    elif f4_positive and all(f2_positive):
        level = ValidityLevel.COVERAGE_ONLY
    else:
        level = ValidityLevel.DEGENERATE
    return ValidityReport(
        f4_positive=f4_positive,
        f1_positive=f1_positive,
        f2_positive=f2_positive,
        strong_gate=tuple(strong),
        v_in_range=v_in_range,
        e_in_range=tuple(e_in),
        s_in_range=tuple(s_in),
        level=level,
    )


def _guard(inv: InvariantSet) -> None:
    if inv.total == 0:
        raise EmptyCohort("all counts are zero")
    if inv.hyperdet <= 0:
        raise DegenerateDiscriminant(
            f"hyperdeterminant is {inv.hyperdet}; must be positive for a "
            "real two-solution inversion"
        )
    for d, m in enumerate(inv.marginal_dets, start=1):
        if m == 0:
            raise SingularLayer(f"marginal determinant for disease {d} is zero")


def _normalized(inv: InvariantSet):
    """Scale-free float versions of the invariants.

    Working with the invariants of the relative frequencies a/n rather
    than the raw counts makes every downstream formula invariant under
    rescaling the counts, bit for bit.
    """
    t = Fraction(inv.total)
    cubic = float(Fraction(inv.cubic) / t**3)
    hyperdet = float(Fraction(inv.hyperdet) / t**4)
    marg = tuple(float(Fraction(m) / t**2) for m in inv.marginal_dets)
    diff = tuple(float(Fraction(g) / t**2) for g in inv.layer_diffs)
    return cubic, hyperdet, marg, diff


def coverage_from_invariants(inv: InvariantSet) -> float:
    """Coverage of the canonical solution, from (total, cubic, hyperdet) only.

    The coverage estimate does not involve the per-disease invariants at
    all, so it stays meaningful under the weaker coverage-only gate.
    """
    _guard(inv)
    cubic, hyperdet, _, _ = _normalized(inv)
    root = math.sqrt(hyperdet)
    return (root + cubic) / (2 * root)


def _ratio(num: float, den: float, den_sign: int) -> float:
    """num/den where the exact sign of the denominator is known nonzero.

    Shields the rare case where float cancellation rounds a nonzero
    denominator to exactly 0.0: the true quotient is then astronomically
    large and is reported as a correctly signed infinity.
    """
    if den != 0.0:
        return num / den
    return math.inf * _sign(num) * den_sign


def solve_both(a) -> tuple[ModelParams, ModelParams]:
    """Both exact solutions of the count table, canonical first.

    The two solutions are mirrors: their coverages sum to 1 and the
    exposures of one are the vaccinated-seropositivity rates of the
    other.  Seroconversions are recovered from s = (q - e) / (1 - e);
    if some exposure of either solution equals 1 exactly this is 0/0 and
    :class:`SeroconversionUndefined` is raised (use :func:`estimate` for
    a per-component NaN treatment instead).
    """
    inv = invariants(a)
    _guard(inv)
    cubic, hyperdet, marg, diff = _normalized(inv)
    root = math.sqrt(hyperdet)

    v = (root + cubic) / (2 * root)
    e = []
    q = []
    s_top = []
    s_bottom = []
    for i, (m, g) in enumerate(zip(marg, diff), start=1):
        # exact boundary detection: e_i = 1 iff m - g + sqrt(h) = 0,
        # q_i = 1 (mirror exposure 1) iff m - g - sqrt(h) = 0
        mg = inv.marginal_dets[i - 1] - inv.layer_diffs[i - 1]
        top_sign = _sign_plus_root(mg, 1, inv.hyperdet)
        bottom_sign = _sign_plus_root(mg, -1, inv.hyperdet)
        if top_sign == 0:
            raise SeroconversionUndefined(
                f"canonical exposure for disease {i} equals 1"
            )
        if bottom_sign == 0:
            raise SeroconversionUndefined(
                f"mirror exposure for disease {i} equals 1"
            )
        ei = (m + g - root) / (2 * m)
        qi = (m + g + root) / (2 * m)
        e.append(ei)
        q.append(qi)
        sm = _sign(inv.marginal_dets[i - 1])
        s_top.append(_ratio(qi - ei, 1 - ei, top_sign * sm))
        s_bottom.append(_ratio(ei - qi, 1 - qi, bottom_sign * sm))

    top = ModelParams(v=v, e=tuple(e), s=tuple(s_top))
    bottom = ModelParams(v=1 - v, e=tuple(q), s=tuple(s_bottom))
    return top, bottom


def estimate(a) -> EstimateResult:
    """Canonical closed-form estimate with validity gates and mirror.

    The seroconversion uses its own closed form
    ``s = 2*sqrt(h) / (m - g + sqrt(h))`` rather than the (q - e)/(1 - e)
    quotient; the two agree wherever e != 1.  Estimates are returned
    even when the validity gates fail -- out-of-range values are the
    signal that the input data are of poor quality -- but the hard
    degeneracies (empty cohort, nonpositive hyperdeterminant, singular
    marginal) raise instead of returning meaningless numbers.
    """
    inv = invariants(a)
    _guard(inv)
    cubic, hyperdet, marg, diff = _normalized(inv)
    root = math.sqrt(hyperdet)

    v = (root + cubic) / (2 * root)
    e = []
    q = []
    s = []
    s_defined = []
    mirror_s = []
    mirror_s_defined = []
    for i, (m, g) in enumerate(zip(marg, diff)):
        e.append((m + g - root) / (2 * m))
        q.append((m + g + root) / (2 * m))
        mg = inv.marginal_dets[i] - inv.layer_diffs[i]
        top_sign = _sign_plus_root(mg, 1, inv.hyperdet)
        bottom_sign = _sign_plus_root(mg, -1, inv.hyperdet)
        if top_sign == 0:
            s.append(math.nan)
            s_defined.append(False)
        else:
            s.append(_ratio(2 * root, m - g + root, top_sign))
            s_defined.append(True)
        if bottom_sign == 0:
            mirror_s.append(math.nan)
            mirror_s_defined.append(False)
        else:
            mirror_s.append(_ratio(-2 * root, m - g - root, bottom_sign))
            mirror_s_defined.append(True)

    params = ModelParams(v=v, e=tuple(e), s=tuple(s))
    mirror = ModelParams(v=1 - v, e=tuple(q), s=tuple(mirror_s))
    return EstimateResult(
        params=params,
        q=tuple(q),
        mirror=mirror,
        validity=check_validity(inv),
        invariants=inv,
        s_defined=tuple(s_defined),
        mirror_s_defined=tuple(mirror_s_defined),
    )


def residual(a, params: ModelParams) -> float:
    """Largest absolute cell error between observed and refitted counts.

    ``max_k |n * forward(params)[k] - a[k]|`` -- zero (up to float
    rounding) exactly when ``params`` solves the count table.
    """
    cells = as_count_vector(a)
    n = sum(cells)
    if n == 0:
        raise EmptyCohort("all counts are zero")
    probs = forward(params)
    return float(max(abs(n * p - c) for p, c in zip(probs, cells)))
