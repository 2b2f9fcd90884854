"""Exact univariate polynomials and polynomial matrices over the rationals.

Coefficients are ``fractions.Fraction`` values (arbitrary precision, always
reduced, positive denominator), stored in ascending degree order.  The zero
polynomial is the empty coefficient tuple and has degree -1.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import PoleplaceError

# Exact rational scalar used throughout the package.
Rat = Fraction


def as_rat(value) -> Fraction:
    """Coerce an int, Fraction, or exact string like ``"-3/4"`` to a Fraction.

    Floats are rejected: they would silently leave the exact domain.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


class RatPoly:
    """Univariate polynomial with exact rational coefficients.

    ``coeffs[k]`` is the coefficient of s^k.  The tuple carries no trailing
    zeros, so the encoding is canonical and equality is structural.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [as_rat(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs: tuple[Fraction, ...] = tuple(cs)

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls) -> "RatPoly":
        return cls(())

    @classmethod
    def one(cls) -> "RatPoly":
        return cls((1,))

    @classmethod
    def constant(cls, c) -> "RatPoly":
        return cls((c,))

    @classmethod
    def variable(cls) -> "RatPoly":
        """The monomial s."""
        return cls((0, 1))

    @classmethod
    def monomial(cls, degree: int, coeff=1) -> "RatPoly":
        if degree < 0:
            raise ValueError("monomial degree must be >= 0")
        return cls((0,) * degree + (coeff,))

    @classmethod
    def from_roots(cls, roots: Iterable) -> "RatPoly":
        """Monic polynomial with the given exact rational roots."""
        p = cls.one()
        for r in roots:
            p = p * cls((-as_rat(r), 1))
        return p

    # -- basic queries ------------------------------------------------

    @property
    def degree(self) -> int:
        """Degree; -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def leading_coeff(self) -> Fraction:
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    def coeff(self, k: int) -> Fraction:
        """Coefficient of s^k (zero beyond the stored length)."""
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else Fraction(0)

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other) -> "RatPoly":
        other = _as_poly(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return RatPoly(self.coeff(k) + other.coeff(k) for k in range(n))

    __radd__ = __add__

    def __neg__(self) -> "RatPoly":
        return RatPoly(-c for c in self.coeffs)

    def __sub__(self, other) -> "RatPoly":
        return self + (-_as_poly(other))

    def __rsub__(self, other) -> "RatPoly":
        return _as_poly(other) + (-self)

    def __mul__(self, other) -> "RatPoly":
        if isinstance(other, (int, Fraction)):
            return RatPoly(c * other for c in self.coeffs)
        other = _as_poly(other)
        if self.is_zero or other.is_zero:
            return RatPoly.zero()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return RatPoly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "RatPoly":
        if k < 0:
            raise ValueError("negative power of a polynomial")
        result = RatPoly.one()
        for _ in range(k):
            result = result * self
        return result

    def __divmod__(self, other) -> tuple["RatPoly", "RatPoly"]:
        """Exact polynomial long division."""
        other = _as_poly(other)
        if other.is_zero:
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dq = len(rem) - len(other.coeffs)
        if dq < 0:
            return RatPoly.zero(), self
        quo = [Fraction(0)] * (dq + 1)
        lead = other.leading_coeff
        for k in range(dq, -1, -1):
            c = rem[k + other.degree] / lead
            quo[k] = c
            if c:
                for j, b in enumerate(other.coeffs):
                    rem[k + j] -= c * b
        return RatPoly(quo), RatPoly(rem[: other.degree if other.degree > 0 else 0])

    def __mod__(self, other) -> "RatPoly":
        return divmod(self, other)[1]

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = RatPoly((other,))
        return isinstance(other, RatPoly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __bool__(self) -> bool:
        return not self.is_zero

    # -- calculus and evaluation ---------------------------------------

    def derivative(self) -> "RatPoly":
        """Formal derivative."""
        return RatPoly(k * c for k, c in enumerate(self.coeffs) if k >= 1)

    def __call__(self, x):
        """Horner evaluation; exact for Fraction input, numeric otherwise."""
        result = x * 0  # zero of the argument's type
        for c in reversed(self.coeffs):
            result = result * x + c
        return result

    def monic(self) -> "RatPoly":
        if self.is_zero:
            raise ValueError("cannot normalize the zero polynomial")
        lc = self.leading_coeff
        return self if lc == 1 else RatPoly(c / lc for c in self.coeffs)

    def padded_coeffs(self, length: int) -> tuple[Fraction, ...]:
        """Coefficients extended with zeros to exactly ``length`` entries."""
        if length < len(self.coeffs):
            raise ValueError("pad length shorter than the polynomial")
        return self.coeffs + (Fraction(0),) * (length - len(self.coeffs))

    # -- display --------------------------------------------------------

    def __repr__(self) -> str:
        return f"RatPoly({self!s})"

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        parts = []
        for k in range(self.degree, -1, -1):
            c = self.coeff(k)
            if c == 0:
                continue
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            if k == 0:
                body = str(mag)
            else:
                var = "s" if k == 1 else f"s^{k}"
                body = var if mag == 1 else f"{mag}*{var}"
            parts.append((sign, body))
        head_sign, head = parts[0]
        text = ("-" if head_sign == "-" else "") + head
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text


def _as_poly(value) -> RatPoly:
    if isinstance(value, RatPoly):
        return value
    if isinstance(value, (int, Fraction)):
        return RatPoly((value,))
    raise TypeError(f"cannot treat {type(value).__name__} as a polynomial")


def poly_gcd(a: RatPoly, b: RatPoly) -> RatPoly:
    """Monic greatest common divisor by the Euclidean algorithm.

    gcd(p, 0) is the monic normalization of p; both inputs zero is an error.
    """
    if a.is_zero and b.is_zero:
        raise PoleplaceError("gcd of two zero polynomials is undefined")
    while not b.is_zero:
        a, b = b, a % b
    return a.monic()


def poly_diff(p: RatPoly) -> RatPoly:
    """Formal derivative (function form of RatPoly.derivative)."""
    return p.derivative()


def interpolate(points: Sequence[tuple[Fraction, Fraction]]) -> RatPoly:
    """Exact Lagrange interpolation through distinct rational nodes."""
    result = RatPoly.zero()
    for i, (xi, yi) in enumerate(points):
        if yi == 0:
            continue
        basis = RatPoly.one()
        denom = Fraction(1)
        for j, (xj, _) in enumerate(points):
            if j == i:
                continue
            basis = basis * RatPoly((-xj, 1))
            denom *= xi - xj
        result = result + basis * (yi / denom)
    return result


def interpolation_nodes(count: int) -> list[Fraction]:
    """The first ``count`` nodes of the sequence 0, 1, -1, 2, -2, ...

    Small integers keep intermediate rationals small during exact
    determinant interpolation.
    """
    nodes = []
    k = 0
    while len(nodes) < count:
        if k == 0:
            nodes.append(Fraction(0))
        else:
            nodes.append(Fraction(k))
            if len(nodes) < count:
                nodes.append(Fraction(-k))
        k += 1
    return nodes


class RatPolyMatrix:
    """Matrix of RatPoly entries, stored row-major."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, rows: int, cols: int, entries: Iterable[RatPoly]):
        self.rows = rows
        self.cols = cols
        self.entries: tuple[RatPoly, ...] = tuple(
            e if isinstance(e, RatPoly) else _as_poly(e) for e in entries
        )
        if len(self.entries) != rows * cols:
            raise ValueError(
                f"expected {rows * cols} entries for a {rows}x{cols} matrix, "
                f"got {len(self.entries)}"
            )

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> "RatPolyMatrix":
        r = len(rows)
        c = len(rows[0]) if r else 0
        if any(len(row) != c for row in rows):
            raise ValueError("ragged rows")
        return cls(r, c, [e for row in rows for e in row])

    @classmethod
    def identity(cls, k: int) -> "RatPolyMatrix":
        return cls(
            k, k, [RatPoly.one() if i == j else RatPoly.zero() for i in range(k) for j in range(k)]
        )

    def __getitem__(self, idx) -> RatPoly:
        i, j = idx
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(idx)
        return self.entries[i * self.cols + j]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, RatPolyMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and self.entries == other.entries
        )

    def __hash__(self):
        return hash((self.rows, self.cols, self.entries))

    def row(self, i: int) -> tuple[RatPoly, ...]:
        return self.entries[i * self.cols : (i + 1) * self.cols]

    def hstack(self, other: "RatPolyMatrix") -> "RatPolyMatrix":
        if self.rows != other.rows:
            raise ValueError("row count mismatch in hstack")
        entries = []
        for i in range(self.rows):
            entries.extend(self.row(i))
            entries.extend(other.row(i))
        return RatPolyMatrix(self.rows, self.cols + other.cols, entries)

    def submatrix(self, row_idx: Sequence[int], col_idx: Sequence[int]) -> "RatPolyMatrix":
        entries = [self[i, j] for i in row_idx for j in col_idx]
        return RatPolyMatrix(len(row_idx), len(col_idx), entries)

    def transpose(self) -> "RatPolyMatrix":
        return RatPolyMatrix(
            self.cols, self.rows, [self[i, j] for j in range(self.cols) for i in range(self.rows)]
        )

    def row_degrees(self) -> list[int]:
        """Max entry degree per row; -1 for an all-zero row."""
        return [max(e.degree for e in self.row(i)) for i in range(self.rows)]

    def evaluate(self, x: Fraction) -> list[list[Fraction]]:
        """Exact entrywise evaluation at a rational point."""
        return [[self[i, j](x) for j in range(self.cols)] for i in range(self.rows)]

    def __repr__(self) -> str:
        body = "; ".join(
            ", ".join(str(self[i, j]) for j in range(self.cols)) for i in range(self.rows)
        )
        return f"RatPolyMatrix({self.rows}x{self.cols}: {body})"


def polymat_det(M: RatPolyMatrix) -> RatPoly:
    """Exact determinant of a square polynomial matrix.

    Evaluates the matrix at deg-bound+1 small integer nodes, takes exact
    scalar determinants, and interpolates back.  Cost is polynomial in the
    dimension, unlike cofactor expansion.
    """
    from . import qlinalg

    if M.rows != M.cols:
        raise PoleplaceError(f"determinant of a non-square {M.rows}x{M.cols} matrix")
    if M.rows == 0:
        return RatPoly.one()
    degs = M.row_degrees()
    if any(d < 0 for d in degs):
        return RatPoly.zero()
    bound = sum(degs)
    nodes = interpolation_nodes(bound + 1)
    points = [(x, qlinalg.det(M.evaluate(x))) for x in nodes]
    return interpolate(points)


def polymat_det_cofactor(M: RatPolyMatrix) -> RatPoly:
    """Determinant by cofactor expansion.

    Exponential in the dimension; kept as an independent cross-check path
    for matrices of dimension <= 4.
    """
    if M.rows != M.cols:
        raise PoleplaceError(f"determinant of a non-square {M.rows}x{M.cols} matrix")
    n = M.rows
    if n == 0:
        return RatPoly.one()
    if n == 1:
        return M[0, 0]
    total = RatPoly.zero()
    rest_rows = list(range(1, n))
    for j in range(n):
        entry = M[0, j]
        if entry.is_zero:
            continue
        minor = M.submatrix(rest_rows, [c for c in range(n) if c != j])
        term = entry * polymat_det_cofactor(minor)
        total = total + (term if j % 2 == 0 else -term)
    return total


def polymat_minors(M: RatPolyMatrix, k: int) -> dict[tuple[tuple[int, ...], tuple[int, ...]], RatPoly]:
    """All k x k minors, keyed by (row subset, column subset).

    Subsets are strictly increasing tuples; iteration order is lexicographic
    in rows, then columns, matching the canonical subset ordering used for
    Plucker indexing.
    """
    if not (1 <= k <= min(M.rows, M.cols)):
        raise PoleplaceError(f"minor size {k} out of range for a {M.rows}x{M.cols} matrix")
    out: dict[tuple[tuple[int, ...], tuple[int, ...]], RatPoly] = {}
    for row_idx in itertools.combinations(range(M.rows), k):
        for col_idx in itertools.combinations(range(M.cols), k):
            out[(row_idx, col_idx)] = polymat_det(M.submatrix(row_idx, col_idx))
    return out
