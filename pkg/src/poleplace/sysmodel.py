"""Plant representations, rank tests, MFD realization, and genericity verdicts.

A plant lives either as exact state-space matrices (A, B, C) over the
rationals, as a left matrix fraction description (D, N), or as both.  The
verdict table answers, for dimensions (m, p, n) and a base field, whether a
generic plant of that size is arbitrarily pole assignable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence

from . import qlinalg
from .errors import ConsistencyError, PoleplaceError, UnsupportedInputError
from .plucker import plucker_of_mfd
from .qlinalg import QMatrix
from .ratpoly import RatPoly, RatPolyMatrix, polymat_det


def schubert_degree(m: int, p: int) -> int:
    """Number of complex gains solving a generic square placement problem.

    d(m, p) = [1! 2! ... (p-1)! * (mp)!] / [m! (m+1)! ... (m+p-1)!], always
    an integer, symmetric in m and p.
    """
    if m < 1 or p < 1:
        raise PoleplaceError("dimensions m, p must be >= 1")
    num = math.factorial(m * p)
    for j in range(1, p):
        num *= math.factorial(j)
    den = 1
    for j in range(m, m + p):
        den *= math.factorial(j)
    d, rem = divmod(num, den)
    if rem:
        raise ConsistencyError(f"degree formula produced a non-integer for ({m}, {p})")
    return d


def berstein_is_odd(m: int, p: int) -> bool:
    """Parity of schubert_degree without computing it.

    Odd exactly when min(m,p) = 1, or min(m,p) = 2 and max(m,p)+1 is a
    power of two.
    """
    if m < 1 or p < 1:
        raise PoleplaceError("dimensions m, p must be >= 1")
    lo, hi = min(m, p), max(m, p)
    if lo == 1:
        return True
    if lo == 2:
        return (hi + 1) & hi == 0
    return False


def controllable(A: Sequence[Sequence], B: Sequence[Sequence]) -> bool:
    """Exact rank test of [B, AB, ..., A^(n-1)B] over the rationals."""
    A = qlinalg.qmat(A)
    B = qlinalg.qmat(B)
    n = len(A)
    if any(len(row) != n for row in A):
        raise PoleplaceError("A must be square")
    if len(B) != n:
        raise PoleplaceError("B must have as many rows as A")
    blocks: list[list[Fraction]] = [list(row) for row in B]
    power = B
    for _ in range(1, n):
        power = qlinalg.matmul(A, power)
        for i in range(n):
            blocks[i] = blocks[i] + power[i]
    return qlinalg.rank(blocks) == n


def observable(A: Sequence[Sequence], C: Sequence[Sequence]) -> bool:
    """Dual rank test: (A, C) observable iff (A^T, C^T) controllable."""
    A = qlinalg.qmat(A)
    C = qlinalg.qmat(C)
    if C and len(C[0]) != len(A):
        raise PoleplaceError("C must have as many columns as A has rows")
    return controllable(qlinalg.transpose(A), qlinalg.transpose(C))


def single_output_surjective(d: RatPoly, nums: Sequence[RatPoly], n: int) -> bool:
    """Exact pole-assignability test for single-measurement (p = 1) plants.

    Given a coprime scalar denominator d of degree n and the numerator row,
    every degree-n target is reachable iff the numerators span the space of
    polynomials of degree at most n-1.
    """
    if d.degree != n:
        raise PoleplaceError(f"denominator degree {d.degree} != n = {n}")
    for q in nums:
        if q.degree >= n:
            raise PoleplaceError(f"numerator degree {q.degree} must be < n = {n}")
    matrix = [list(q.padded_coeffs(n)) for q in nums]
    return qlinalg.rank(matrix) == n


class Verdict(Enum):
    GENERICALLY_SURJECTIVE = "GenericallySurjective"
    NOT_GENERICALLY_SURJECTIVE = "NotGenericallySurjective"
    UNKNOWN = "Unknown"


class FieldKind(Enum):
    REAL = "Real"
    ALGEBRAICALLY_CLOSED = "AlgebraicallyClosed"


@dataclass(frozen=True)
class GenericityVerdict:
    """Verdict plus the single authority that justifies it."""

    verdict: Verdict
    authority: str
    m: int
    p: int
    n: int
    d: Optional[int] = None  # Schubert degree, populated when n == m*p
    note: str = ""


# Machine-readable authority tags for the verdict table.
AUTH_DIMENSION = "DimensionCount"
AUTH_CLOSED_FIELD = "BrockettByrnes"
AUTH_EXCESS_FREEDOM = "Wang"
AUTH_ODD_DEGREE = "OddDegree"
AUTH_WILLEMS_HESSELINK = "WillemsHesselink"
AUTH_PAPER_EXAMPLE = "PaperExample"
AUTH_CONJECTURE_OPEN = "KimConjectureOpen"


def classify_genericity(m: int, p: int, n: int, field: FieldKind) -> GenericityVerdict:
    """Decision table for generic arbitrary pole assignability.

    Every row cites exactly one authority: the dimension count, the
    closed-field theorem, the excess-freedom theorem over the reals, the
    odd-degree corollary, the two known square real counterexample sizes,
    or the open even-degree conjecture.
    """
    if m < 1 or p < 1 or n < 1:
        raise PoleplaceError("dimensions m, p, n must be >= 1")
    d = schubert_degree(m, p) if m * p == n else None
    if m * p < n:
        return GenericityVerdict(Verdict.NOT_GENERICALLY_SURJECTIVE, AUTH_DIMENSION, m, p, n, d)
    if field is FieldKind.ALGEBRAICALLY_CLOSED:
        return GenericityVerdict(Verdict.GENERICALLY_SURJECTIVE, AUTH_CLOSED_FIELD, m, p, n, d)
    if m * p > n:
        return GenericityVerdict(Verdict.GENERICALLY_SURJECTIVE, AUTH_EXCESS_FREEDOM, m, p, n, d)
    # square real case: n == m*p
    if berstein_is_odd(m, p):
        return GenericityVerdict(Verdict.GENERICALLY_SURJECTIVE, AUTH_ODD_DEGREE, m, p, n, d)
    dims = (min(m, p), max(m, p))
    if dims == (2, 2):
        return GenericityVerdict(
            Verdict.NOT_GENERICALLY_SURJECTIVE, AUTH_WILLEMS_HESSELINK, m, p, n, d
        )
    if dims == (2, 4):
        return GenericityVerdict(Verdict.NOT_GENERICALLY_SURJECTIVE, AUTH_PAPER_EXAMPLE, m, p, n, d)
    return GenericityVerdict(
        Verdict.UNKNOWN, AUTH_CONJECTURE_OPEN, m, p, n, d, note="conjectured NOT"
    )


# ---------------------------------------------------------------------------
# Plants and realization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlantModel:
    """A plant with at least one of its two representations present."""

    n: int
    m: int
    p: int
    state_space: Optional[tuple[QMatrix, QMatrix, QMatrix]] = None
    mfd: Optional[tuple[RatPolyMatrix, RatPolyMatrix]] = None
    provenance: str = ""

    def __post_init__(self):
        if self.state_space is None and self.mfd is None:
            raise PoleplaceError("a plant needs a state-space or MFD representation")

    @classmethod
    def from_mfd(cls, D: RatPolyMatrix, N: RatPolyMatrix, realize: bool = False) -> "PlantModel":
        """Build from a left MFD; optionally attach a state-space realization."""
        P = plucker_of_mfd(D, N)  # validates shapes and the degree pattern
        if realize:
            A, B, C = realize_left_mfd(D, N)
            plant = cls(
                n=P.n, m=P.m, p=P.p, state_space=(A, B, C), mfd=(D, N), provenance="mfd+realized"
            )
            if not transfer_consistency(plant):
                raise ConsistencyError("realization disagrees with the MFD it came from")
            return plant
        return cls(n=P.n, m=P.m, p=P.p, mfd=(D, N), provenance="mfd")

    @classmethod
    def from_state_space(
        cls, A: Sequence[Sequence], B: Sequence[Sequence], C: Sequence[Sequence]
    ) -> "PlantModel":
        A = qlinalg.qmat(A)
        B = qlinalg.qmat(B)
        C = qlinalg.qmat(C)
        n = len(A)
        if any(len(row) != n for row in A):
            raise PoleplaceError("A must be square")
        if len(B) != n:
            raise PoleplaceError("B must have n rows")
        if any(len(row) != n for row in C):
            raise PoleplaceError("C must have n columns")
        m = len(B[0]) if B else 0
        p = len(C)
        if m < 1 or p < 1:
            raise PoleplaceError("plants need at least one input and one output")
        return cls(n=n, m=m, p=p, state_space=(A, B, C), provenance="state_space")


def _row_degree_structure(D: RatPolyMatrix) -> tuple[list[int], QMatrix]:
    """Row degrees of D and the highest-row-degree coefficient matrix."""
    degs = D.row_degrees()
    if any(d < 0 for d in degs):
        raise UnsupportedInputError("D has an identically zero row")
    hr = [[D[i, j].coeff(degs[i]) for j in range(D.cols)] for i in range(D.rows)]
    return degs, hr


def realize_left_mfd(
    D: RatPolyMatrix, N: RatPolyMatrix
) -> tuple[QMatrix, QMatrix, QMatrix]:
    """Observable-form state-space realization of a row-proper left MFD.

    Requires D row proper (highest-row-degree coefficient matrix invertible)
    and the MFD strictly proper (each row of N of lower degree than the
    matching row of D).  The result satisfies det(sI - A) = det D normalized
    monic, and its transfer function agrees with the MFD exactly; both facts
    are re-verified at rational sample points before returning.
    """
    if D.rows != D.cols:
        raise PoleplaceError(f"D must be square, got {D.rows}x{D.cols}")
    if N.rows != D.rows:
        raise PoleplaceError(f"N must have {D.rows} rows")
    p = D.rows
    m = N.cols
    degs, hr = _row_degree_structure(D)
    n = sum(degs)
    if n < 1:
        raise UnsupportedInputError(f"deg det D = {n} < 1: nothing to realize")
    if not qlinalg.is_invertible(hr):
        raise UnsupportedInputError(
            "D is not row proper (highest-row-degree coefficient matrix is singular); "
            "transform the MFD before realizing"
        )
    for i in range(p):
        for j in range(m):
            if N[i, j].degree >= degs[i]:
                raise UnsupportedInputError(
                    f"N[{i}][{j}] has degree {N[i, j].degree} >= row degree {degs[i]}; "
                    "the MFD is not strictly proper"
                )

    # Normalize so the highest-row-degree coefficient matrix becomes I.
    hr_inv = qlinalg.inv(hr)
    Dn = _qmat_times_polymat(hr_inv, D)
    Nn = _qmat_times_polymat(hr_inv, N)

    # Realize the transposed (right) MFD in controller form, then transpose
    # back.  Column j of the transposed data has column degree degs[j].
    offsets = [0] * p
    for j in range(1, p):
        offsets[j] = offsets[j - 1] + degs[j - 1]

    shift = qlinalg.zeros(n, n)  # block-diagonal upshift chains
    inject = qlinalg.zeros(n, p)  # one injection per chain tail
    for j in range(p):
        base = offsets[j]
        for k in range(degs[j] - 1):
            shift[base + k][base + k + 1] = Fraction(1)
        inject[base + degs[j] - 1][j] = Fraction(1)

    low_d = qlinalg.zeros(p, n)  # low-order coefficients of the normalized D
    low_n = qlinalg.zeros(m, n)  # low-order coefficients of the normalized N
    for j in range(p):
        base = offsets[j]
        for k in range(degs[j]):
            for i in range(p):
                low_d[i][base + k] = Dn[j, i].coeff(k)
            for i in range(m):
                low_n[i][base + k] = Nn[j, i].coeff(k)

    # controller form of the transpose: A' = shift - inject @ low_d
    correction = qlinalg.matmul(inject, low_d)
    A_t = [[shift[i][j] - correction[i][j] for j in range(n)] for i in range(n)]

    A = qlinalg.transpose(A_t)
    B = qlinalg.transpose(low_n)
    C = qlinalg.transpose(inject)

    _verify_realization(A, B, C, D, N, n)
    return A, B, C


def _qmat_times_polymat(Q: QMatrix, M: RatPolyMatrix) -> RatPolyMatrix:
    entries = []
    for i in range(len(Q)):
        for j in range(M.cols):
            acc = RatPoly.zero()
            for k in range(M.rows):
                if Q[i][k]:
                    acc = acc + M[k, j] * Q[i][k]
            entries.append(acc)
    return RatPolyMatrix(len(Q), M.cols, entries)


def char_poly(A: QMatrix) -> RatPoly:
    """Exact characteristic polynomial det(sI - A)."""
    n = len(A)
    entries = []
    for i in range(n):
        for j in range(n):
            const = -A[i][j]
            entries.append(RatPoly((const, 1)) if i == j else RatPoly.constant(const))
    return polymat_det(RatPolyMatrix(n, n, entries))


def _sample_points(count: int, forbidden: RatPoly) -> list[Fraction]:
    """Rational sample points that are not roots of ``forbidden``."""
    points: list[Fraction] = []
    k = 1
    while len(points) < count:
        for cand in (Fraction(k), Fraction(-k), Fraction(1, k + 1)):
            if len(points) < count and cand not in points and forbidden(cand) != 0:
                points.append(cand)
        k += 1
    return points


def _verify_realization(
    A: QMatrix, B: QMatrix, C: QMatrix, D: RatPolyMatrix, N: RatPolyMatrix, n: int
) -> None:
    det_d = polymat_det(D)
    if char_poly(A) != det_d.monic():
        raise ConsistencyError("characteristic polynomial does not match det D")
    for s0 in _sample_points(5, det_d):
        if _transfer_at(A, B, C, s0) != _mfd_transfer_at(D, N, s0):
            raise ConsistencyError(f"transfer functions disagree at s = {s0}")


def _transfer_at(A: QMatrix, B: QMatrix, C: QMatrix, s0: Fraction) -> QMatrix:
    n = len(A)
    sI_A = [
        [(s0 if i == j else Fraction(0)) - A[i][j] for j in range(n)] for i in range(n)
    ]
    return qlinalg.matmul(C, qlinalg.solve(sI_A, B))


def _mfd_transfer_at(D: RatPolyMatrix, N: RatPolyMatrix, s0: Fraction) -> QMatrix:
    return qlinalg.solve(D.evaluate(s0), N.evaluate(s0))


def transfer_consistency(plant: PlantModel) -> bool:
    """Exact agreement of both representations at 5 non-pole sample points."""
    if plant.state_space is None or plant.mfd is None:
        raise PoleplaceError("transfer_consistency needs both representations")
    A, B, C = plant.state_space
    D, N = plant.mfd
    # avoid the poles of either representation so both sides are evaluable
    forbidden = polymat_det(D) * char_poly(A)
    for s0 in _sample_points(5, forbidden):
        if _transfer_at(A, B, C, s0) != _mfd_transfer_at(D, N, s0):
            return False
    return True
