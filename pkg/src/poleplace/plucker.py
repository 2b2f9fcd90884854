"""Plucker data of a plant given by a left matrix fraction description.

For a p x (m+p) polynomial matrix [D | N], the signed full-size minors
indexed by p-subsets of the columns are the plant's Plucker coordinates.
The matching coordinates of a gain matrix K are the m x m minors of
[-K | I] on the complementary columns; pairing the two families through the
Laplace expansion of the (m+p) x (m+p) block matrix

    [[D(s), N(s)],
     [ -K,    I ]]

recovers the closed-loop characteristic polynomial as an exact bilinear sum.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import qlinalg
from .errors import ImproperPlantError, PoleplaceError
from .ratpoly import RatPoly, RatPolyMatrix, polymat_det


@dataclass(frozen=True)
class SubsetIndex:
    """A p-subset of column positions {0, ..., m+p-1} with its ordinal rank."""

    members: tuple[int, ...]
    ordinal: int

    def __post_init__(self):
        if any(a >= b for a, b in zip(self.members, self.members[1:])):
            raise ValueError(f"subset members must be strictly increasing: {self.members}")


def enumerate_subsets(m: int, p: int) -> list[SubsetIndex]:
    """All C(m+p, p) column subsets in lexicographic order.

    The first element is {0, ..., p-1}, the columns of the D block.
    """
    if m < 1 or p < 1:
        raise PoleplaceError("dimensions m, p must be >= 1")
    combos = itertools.combinations(range(m + p), p)
    return [SubsetIndex(members, ordinal) for ordinal, members in enumerate(combos)]


def subset_complement(members: Sequence[int], m: int, p: int) -> tuple[int, ...]:
    chosen = set(members)
    return tuple(c for c in range(m + p) if c not in chosen)


def complement_sign(alpha: SubsetIndex | Sequence[int], m: int, p: int) -> int:
    """Laplace-expansion sign pairing a top-row minor with its complement.

    Expanding the block determinant along the first p rows, the minor on
    columns alpha carries the sign (-1)^(sum(alpha) + 0+1+...+(p-1)).
    """
    members = alpha.members if isinstance(alpha, SubsetIndex) else tuple(alpha)
    exponent = sum(members) + p * (p - 1) // 2
    return -1 if exponent % 2 else 1


# ---------------------------------------------------------------------------
# Compensator-side minors of [-K | I]
# ---------------------------------------------------------------------------

# A symbolic minor is a dict: monomial -> integer coefficient, where a
# monomial is a sorted tuple of row-major gain-entry indices (i*p + j for
# K[i][j]).  The empty tuple is the constant monomial.
SymPoly = dict[tuple[int, ...], int]


def gain_minor_symbolic(alpha: SubsetIndex | Sequence[int], m: int, p: int) -> SymPoly:
    """The m x m minor of [-K | I] on the columns complementary to alpha.

    Returned as an exact polynomial in the entries of K.  For alpha equal to
    {0, ..., p-1} the complement picks only identity columns and the minor
    is the constant 1.
    """
    members = alpha.members if isinstance(alpha, SubsetIndex) else tuple(alpha)
    beta = subset_complement(members, m, p)
    # column c < p contributes -K[:, c]; column c >= p contributes e_{c-p}
    columns = []
    for c in beta:
        if c < p:
            columns.append([{(r * p + c,): -1} for r in range(m)])
        else:
            columns.append([{(): 1} if r == c - p else {} for r in range(m)])
    return _sym_det(columns, list(range(m)))


def _sym_det(columns: list[list[SymPoly]], rows: list[int]) -> SymPoly:
    """Determinant of a small symbolic matrix, expanding along the first column."""
    if not columns:
        return {(): 1}
    head, rest = columns[0], columns[1:]
    total: SymPoly = {}
    for pos, r in enumerate(rows):
        entry = head[r]
        if not entry:
            continue
        sub = _sym_det(rest, rows[:pos] + rows[pos + 1 :])
        sign = -1 if pos % 2 else 1
        for mono_a, ca in entry.items():
            for mono_b, cb in sub.items():
                mono = tuple(sorted(mono_a + mono_b))
                coeff = total.get(mono, 0) + sign * ca * cb
                if coeff:
                    total[mono] = coeff
                elif mono in total:
                    del total[mono]
    return total


def eval_sym_poly(poly: SymPoly, gain_flat: Sequence) -> object:
    """Evaluate a symbolic minor at a flattened (row-major) gain vector.

    Works for Fraction entries (exact) and complex entries alike.
    """
    total = None
    for mono, coeff in poly.items():
        term = coeff if not mono else coeff * _prod(gain_flat[v] for v in mono)
        total = term if total is None else total + term
    if total is None:
        return 0
    return total


def _prod(values):
    result = None
    for v in values:
        result = v if result is None else result * v
    return result


def gain_minor_value(alpha: SubsetIndex | Sequence[int], K: Sequence[Sequence], m: int, p: int):
    """Numeric value of the compensator minor for an explicit gain matrix."""
    flat = [K[i][j] for i in range(m) for j in range(p)]
    return eval_sym_poly(gain_minor_symbolic(alpha, m, p), flat)


# ---------------------------------------------------------------------------
# Plant-side minors and the assembled system
# ---------------------------------------------------------------------------


def signed_minors(D: RatPolyMatrix, N: RatPolyMatrix) -> list[RatPoly]:
    """Signed full-size minors of [D | N], one per column subset in order.

    No degree validation is performed; see plucker_of_mfd for the validated
    construction.
    """
    p, m = _check_mfd_shapes(D, N)
    stacked = D.hstack(N)
    rows = tuple(range(p))
    out = []
    for alpha in enumerate_subsets(m, p):
        minor = polymat_det(stacked.submatrix(rows, alpha.members))
        sign = complement_sign(alpha, m, p)
        out.append(minor if sign == 1 else -minor)
    return out


def _check_mfd_shapes(D: RatPolyMatrix, N: RatPolyMatrix) -> tuple[int, int]:
    if D.rows != D.cols:
        raise PoleplaceError(f"D must be square, got {D.rows}x{D.cols}")
    if N.rows != D.rows:
        raise PoleplaceError(f"N must have {D.rows} rows, got {N.rows}")
    return D.rows, N.cols


@dataclass(frozen=True)
class PluckerSystem:
    """The indexed coordinate family of a validated plant.

    Exactly one coordinate (at ``lead_index``, the D-block columns) has
    degree n; every other coordinate has degree at most n-1.  ``ambient_dim``
    is the dimension of the ambient projective coordinate space,
    C(m+p, p) - 1.
    """

    m: int
    p: int
    n: int
    subsets: tuple[SubsetIndex, ...]
    coords: tuple[RatPoly, ...]
    lead_index: SubsetIndex

    @property
    def ambient_dim(self) -> int:
        return len(self.subsets) - 1

    @property
    def lead_coord(self) -> RatPoly:
        return self.coords[self.lead_index.ordinal]


def plucker_of_mfd(D: RatPolyMatrix, N: RatPolyMatrix) -> PluckerSystem:
    """Signed minors of [D | N] validated into a PluckerSystem.

    Raises ImproperPlantError if det D does not carry the unique top degree,
    which signals that the MFD is not normalized against the plant's
    characteristic polynomial.
    """
    p, m = _check_mfd_shapes(D, N)
    coords = signed_minors(D, N)
    subsets = enumerate_subsets(m, p)
    n = coords[0].degree
    if n < 1:
        raise ImproperPlantError(f"det D must have degree >= 1, got {n}")
    for alpha, g in zip(subsets[1:], coords[1:]):
        if g.degree >= n:
            raise ImproperPlantError(
                f"coordinate {alpha.members} has degree {g.degree}, "
                f"expected at most {n - 1}; the MFD is improper"
            )
    return PluckerSystem(
        m=m, p=p, n=n, subsets=tuple(subsets), coords=tuple(coords), lead_index=subsets[0]
    )


def combine_with_gain(
    coords: Sequence[RatPoly], m: int, p: int, K: Sequence[Sequence]
) -> RatPoly | np.ndarray:
    """Sum of coordinate polynomials weighted by the gain's minors.

    With exact (int/Fraction) gain entries the result is an exact RatPoly
    equal to the block determinant; with numeric entries it is a complex
    coefficient array in ascending degree order.
    """
    if len(K) != m or any(len(row) != p for row in K):
        raise PoleplaceError(f"gain must be {m}x{p}")
    subsets = enumerate_subsets(m, p)
    if len(coords) != len(subsets):
        raise PoleplaceError("coordinate family size does not match C(m+p, p)")
    exact = all(isinstance(K[i][j], (int, Fraction)) for i in range(m) for j in range(p))
    if exact:
        total = RatPoly.zero()
        for alpha, g in zip(subsets, coords):
            k_val = gain_minor_value(alpha, K, m, p)
            if k_val:
                total = total + g * Fraction(k_val)
        return total
    length = max(len(g.coeffs) for g in coords)
    total_arr = np.zeros(length, dtype=complex)
    for alpha, g in zip(subsets, coords):
        k_val = complex(gain_minor_value(alpha, K, m, p))
        if k_val != 0 and not g.is_zero:
            total_arr[: len(g.coeffs)] += k_val * np.array(
                [float(c) for c in g.coeffs], dtype=float
            )
    return total_arr


def closed_loop_from_plucker(P: PluckerSystem, K: Sequence[Sequence]) -> RatPoly | np.ndarray:
    """Closed-loop characteristic polynomial of a validated plant under gain K.

    Exact for rational K; complex coefficient array for numeric K.  Equals
    the determinant of the assembled block matrix in both cases.
    """
    return combine_with_gain(P.coords, P.m, P.p, K)


def block_closed_loop_matrix(
    D: RatPolyMatrix, N: RatPolyMatrix, K: Sequence[Sequence]
) -> RatPolyMatrix:
    """The (m+p) x (m+p) matrix [[D, N], [-K, I]] for an exact gain K."""
    p, m = _check_mfd_shapes(D, N)
    rows = []
    for i in range(p):
        rows.append(list(D.row(i)) + list(N.row(i)))
    for i in range(m):
        row = [RatPoly.constant(-Fraction(K[i][j])) for j in range(p)]
        row += [RatPoly.one() if j == i else RatPoly.zero() for j in range(m)]
        rows.append(row)
    return RatPolyMatrix.from_rows(rows)


# ---------------------------------------------------------------------------
# Center of the induced central projection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CenterSubspace:
    """Exact data of the projection center cut out by the coordinate family.

    ``coeff_matrix`` holds the coordinates' coefficients (one row per subset,
    columns 1, s, ..., s^n).  The center has projective dimension
    ``ambient_dim - rank``; it attains the minimum ``ambient_dim - n - 1``
    exactly when the coordinates span all polynomials of degree <= n.
    A plant whose center is larger than the minimum cannot place poles
    arbitrarily.
    """

    coeff_matrix: tuple[tuple[Fraction, ...], ...]
    rank: int
    ambient_dim: int
    n: int

    @property
    def dim_center(self) -> int:
        return self.ambient_dim - self.rank

    @property
    def min_possible_dim(self) -> int:
        return self.ambient_dim - self.n - 1

    @property
    def full_span(self) -> bool:
        return self.rank == self.n + 1

    @property
    def surjectivity_obstructed(self) -> bool:
        """True when the center's excess dimension rules out surjectivity."""
        return not self.full_span


def center_subspace(P: PluckerSystem) -> CenterSubspace:
    """Exact rank computation for the plant's projection center."""
    width = P.n + 1
    matrix = tuple(g.padded_coeffs(width) for g in P.coords)
    rk = qlinalg.rank([list(row) for row in matrix])
    return CenterSubspace(coeff_matrix=matrix, rank=rk, ambient_dim=P.ambient_dim, n=P.n)
