"""Exact polynomial invariants of an 8-cell antibody-status count table.

A trivalent serosurvey classifies each proband into one of 8 cells by
antibody status (-/-/-) ... (+/+/+).  Cells are indexed k = 0..7 with
disease 1 contributing bit value 4, disease 2 bit value 2 and disease 3
bit value 1, so a[6] counts the (+,+,-) probands and a[0] the (-,-,-)
ones.  The counts form a 2x2x2 tensor; everything the closed-form
estimator needs is a small set of integer polynomial invariants of that
tensor, evaluated here in exact arithmetic.

All functions accept any sequence of 8 nonnegative numbers.  Integers
stay integers, fractions stay fractions, and floats are converted to the
exact rational they represent, so results are always exact and the
algebraic identities between the invariants hold with equality.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass
from fractions import Fraction

Exact = int | Fraction

#: cells with a "+" for each disease (disease d <-> bit 4 >> (d-1))
POSITIVE_CELLS = {1: (4, 5, 6, 7), 2: (2, 3, 6, 7), 3: (1, 3, 5, 7)}

#: the two inscribed tetrahedra of the count cube: cells with an even
#: (resp. odd) number of "+" signs, listed in partner order (k, 7-k pair up)
EVEN_TETRAHEDRON = (0, 3, 5, 6)
ODD_TETRAHEDRON = (7, 4, 2, 1)

LAYER_SIGNS = ("+", "-", "sum")


def as_count_vector(a) -> tuple[Exact, ...]:
    """Validate and exactify a length-8 count vector.

    Floats are mapped to the exact rational they encode; values that are
    whole numbers come back as ``int``.  Raises ``ValueError`` for wrong
    length, negative, or non-finite entries.
    """
    cells = tuple(a)
    if len(cells) != 8:
        raise ValueError(f"count vector must have 8 cells, got {len(cells)}")
    out = []
    for k, x in enumerate(cells):
        if isinstance(x, numbers.Integral):
            x = int(x)
        elif isinstance(x, Fraction):
            pass
        elif isinstance(x, numbers.Real):
            x = float(x)
            if x != x or x in (float("inf"), float("-inf")):
                raise ValueError(f"cell {k} is not finite: {x}")
            x = Fraction(x)
        else:
            raise TypeError(f"cell {k} is not a number: {x!r}")
        if x < 0:
            raise ValueError(f"cell {k} is negative: {cells[k]}")
        if isinstance(x, Fraction) and x.denominator == 1:
            x = int(x)
        out.append(x)
    return tuple(out)


def _check_disease(disease: int) -> None:
    if disease not in (1, 2, 3):
        raise ValueError(f"disease index must be 1, 2 or 3, got {disease}")


def total_count(a) -> Exact:
    """Sum of all 8 cells: the cohort size."""
    return sum(as_count_vector(a))


def cubic_invariant(a):
    """Degree-3 invariant measuring the even/odd tetrahedron asymmetry.

    Antisymmetric under mirroring the table (a[k] <-> a[7-k]); it is the
    numerator offset that moves the coverage estimate away from 1/2.
    """
    a0, a1, a2, a3, a4, a5, a6, a7 = as_count_vector(a)
    even = a0 + a3 + a5 + a6
    odd = a7 + a4 + a2 + a1
    pair_sum = a0 * a7 + a3 * a4 + a5 * a2 + a6 * a1
    skew = (
        a0 * a7 * (a0 - a7)
        + a3 * a4 * (a3 - a4)
        + a5 * a2 * (a5 - a2)
        + a6 * a1 * (a6 - a1)
    )
    triples = (
        a3 * a5 * a6 + a0 * a5 * a6 + a0 * a3 * a6 + a0 * a3 * a5
    ) - (
        a4 * a2 * a1 + a7 * a2 * a1 + a7 * a4 * a1 + a7 * a4 * a2
    )
    return (even - odd) * pair_sum - 2 * skew + 2 * triples


def hyperdeterminant(a):
    """The 2x2x2 hyperdeterminant of the count tensor (degree 4).

    Positive exactly when the count table admits two real parameter
    solutions; its square root is the discriminant of every eliminant
    quadratic of the inversion.
    """
    a0, a1, a2, a3, a4, a5, a6, a7 = as_count_vector(a)
    p0, p1, p2, p3 = a0 * a7, a3 * a4, a5 * a2, a6 * a1
    squares = p0 * p0 + p1 * p1 + p2 * p2 + p3 * p3
    tetra = a0 * a3 * a5 * a6 + a7 * a4 * a2 * a1
    cross = (
        p0 * p1 + p0 * p2 + p0 * p3 + p1 * p2 + p1 * p3 + p2 * p3
    )
    return squares + 4 * tetra - 2 * cross


def hyperdeterminant_gradient(a) -> tuple:
    """All 8 partial derivatives of :func:`hyperdeterminant` at ``a``.

    Satisfies, exactly, twice the cubic invariant = (sum of the partials
    over the even tetrahedron) - (sum over the odd tetrahedron).
    """
    cells = as_count_vector(a)
    pairs = tuple(
        cells[k] * cells[7 - k] for k in EVEN_TETRAHEDRON
    )  # one product per (k, 7-k) pair, indexed like EVEN_TETRAHEDRON
    pair_total = sum(pairs)
    pair_of = {}
    for j, k in enumerate(EVEN_TETRAHEDRON):
        pair_of[k] = j
        pair_of[7 - k] = j
    tetra_of = {
        k: EVEN_TETRAHEDRON if k in EVEN_TETRAHEDRON else ODD_TETRAHEDRON
        for k in range(8)
    }
    grad = []
    for k in range(8):
        partner = cells[7 - k]
        others = 1
        for t in tetra_of[k]:
            if t != k:
                others *= cells[t]
        rest = pair_total - pairs[pair_of[k]]
        grad.append(2 * cells[k] * partner * partner + 4 * others - 2 * partner * rest)
    return tuple(grad)


@dataclass(frozen=True)
class LayerMatrix:
    """A 2x2 slice (or slice sum) of the count cube for one disease axis.

    ``sign`` "+" fixes the disease positive, "-" negative, and "sum" adds
    the two slices, which marginalizes the disease out.  Rows and columns
    run over the remaining two disease axes in ascending index order,
    each ordered (-, +).
    """

    rows: tuple[tuple, tuple]
    disease: int
    sign: str

    @property
    def det(self):
        (a, b), (c, d) = self.rows
        return a * d - b * c


def layer_matrix(a, disease: int, sign: str) -> LayerMatrix:
    """Extract the 2x2 layer of the count cube for one disease axis."""
    cells = as_count_vector(a)
    _check_disease(disease)
    if sign not in LAYER_SIGNS:
        raise ValueError(f"sign must be one of {LAYER_SIGNS}, got {sign!r}")
    row_axis, col_axis = (d for d in (1, 2, 3) if d != disease)

    def cell(own_bit, row_bit, col_bit):
        bits = {disease: own_bit, row_axis: row_bit, col_axis: col_bit}
        return cells[4 * bits[1] + 2 * bits[2] + bits[3]]

    def entry(row_bit, col_bit):
        if sign == "+":
            return cell(1, row_bit, col_bit)
        if sign == "-":
            return cell(0, row_bit, col_bit)
        return cell(1, row_bit, col_bit) + cell(0, row_bit, col_bit)

    rows = (
        (entry(0, 0), entry(0, 1)),
        (entry(1, 0), entry(1, 1)),
    )
    return LayerMatrix(rows=rows, disease=disease, sign=sign)


def marginal_det(a, disease: int):
    """Determinant of the 2x2 marginal table with ``disease`` summed out.

    This is the quadratic invariant governing the eliminant of the given
    disease's exposure and post-vaccination seropositivity rates.
    """
    return layer_matrix(a, disease, "sum").det


def layer_det_diff(a, disease: int):
    """det(positive layer) - det(negative layer) for one disease axis."""
    return layer_matrix(a, disease, "+").det - layer_matrix(a, disease, "-").det


@dataclass(frozen=True)
class InvariantSet:
    """All invariants of one cohort's count table, exactly evaluated.

    ``total`` is degree 1 (the cohort size), ``cubic`` degree 3,
    ``hyperdet`` degree 4, and the per-disease ``marginal_dets`` and
    ``layer_diffs`` degree 2.  For every count table,
    ``total**2 * hyperdet == cubic**2 + 4 * prod(marginal_dets)`` holds
    exactly.
    """

    total: Exact
    cubic: Exact
    hyperdet: Exact
    marginal_dets: tuple
    layer_diffs: tuple


def invariants(a) -> InvariantSet:
    """Evaluate every invariant of a count table in one pass."""
    cells = as_count_vector(a)
    return InvariantSet(
        total=sum(cells),
        cubic=cubic_invariant(cells),
        hyperdet=hyperdeterminant(cells),
        marginal_dets=tuple(marginal_det(cells, d) for d in (1, 2, 3)),
        layer_diffs=tuple(layer_det_diff(cells, d) for d in (1, 2, 3)),
    )
