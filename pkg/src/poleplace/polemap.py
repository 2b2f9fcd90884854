"""The pole placement map and the square fiber system over a target polynomial.

The map sends an m x p gain K to the closed-loop characteristic polynomial.
Fixing a monic degree-n target turns its fiber into a polynomial system in
the mp gain entries; with n = mp the system is square and solvable by
continuation.  Coefficients are assembled exactly over the rationals and
converted to complex floats once, at the end.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import qlinalg
from .errors import PoleplaceError, UnsupportedInputError
from .plucker import (
    PluckerSystem,
    closed_loop_from_plucker,
    enumerate_subsets,
    gain_minor_symbolic,
    plucker_of_mfd,
    _sym_det,
)
from .qlinalg import QMatrix
from .ratpoly import RatPoly, RatPolyMatrix, interpolate, polymat_det
from .sysmodel import PlantModel, char_poly, _sample_points


@dataclass(frozen=True)
class TargetPoly:
    """A monic degree-n target for the closed-loop characteristic polynomial.

    Either built from roots (kept for root-evaluation fiber systems; must be
    pairwise distinct) or from monic coefficients.  ``poly`` is the exact
    expanded polynomial whenever the data is rational.
    """

    n: int
    given_as: str  # "roots" | "coeffs"
    roots: Optional[tuple] = None
    poly: Optional[RatPoly] = None

    @classmethod
    def from_roots(cls, roots: Sequence) -> "TargetPoly":
        vals = []
        exact = True
        for r in roots:
            if isinstance(r, (int, Fraction, str)):
                vals.append(Fraction(r))
            else:
                vals.append(complex(r))
                exact = False
        if len(set(vals)) != len(vals):
            raise PoleplaceError("target roots must be pairwise distinct")
        poly = RatPoly.from_roots(vals) if exact else None
        return cls(n=len(vals), given_as="roots", roots=tuple(vals), poly=poly)

    @classmethod
    def from_coeffs(cls, coeffs) -> "TargetPoly":
        poly = coeffs if isinstance(coeffs, RatPoly) else RatPoly(coeffs)
        if poly.degree < 1:
            raise PoleplaceError("target polynomial must have degree >= 1")
        return cls(n=poly.degree, given_as="coeffs", poly=poly.monic())

    def root_values(self) -> tuple[complex, ...]:
        if self.roots is None:
            raise PoleplaceError("this target was given by coefficients, not roots")
        return tuple(complex(r) for r in self.roots)


# ---------------------------------------------------------------------------
# The pole placement map in both representations
# ---------------------------------------------------------------------------


def closed_loop_state(
    A: Sequence[Sequence], B: Sequence[Sequence], C: Sequence[Sequence], K: Sequence[Sequence]
):
    """Characteristic polynomial of the closed loop A + B K C.

    Exact RatPoly for rational K, ascending complex coefficient array for
    numeric K.
    """
    m = len(K)
    p = len(K[0]) if m else 0
    if any(len(row) != p for row in K):
        raise PoleplaceError("ragged gain matrix")
    if len(B[0]) != m or len(C) != p:
        raise PoleplaceError(f"gain must be {len(B[0])}x{len(C)}, got {m}x{p}")
    exact = all(isinstance(K[i][j], (int, Fraction)) for i in range(m) for j in range(p))
    if exact:
        Aq = qlinalg.qmat(A)
        closed = qlinalg.matmul(qlinalg.qmat(B), qlinalg.matmul(qlinalg.qmat(K), qlinalg.qmat(C)))
        total = [[Aq[i][j] + closed[i][j] for j in range(len(Aq))] for i in range(len(Aq))]
        return char_poly(total)
    A_f = np.array([[float(x) for x in row] for row in A])
    B_f = np.array([[float(x) for x in row] for row in B])
    C_f = np.array([[float(x) for x in row] for row in C])
    K_f = np.array([[complex(x) for x in row] for row in K])
    coeffs_desc = np.poly(A_f + B_f @ K_f @ C_f)
    return np.asarray(coeffs_desc, dtype=complex)[::-1].copy()


def closed_loop_mfd(D: RatPolyMatrix, N: RatPolyMatrix, K: Sequence[Sequence]):
    """Monic closed-loop polynomial from the MFD side of the identity."""
    return closed_loop_plucker(plucker_of_mfd(D, N), K)


def closed_loop_plucker(P: PluckerSystem, K: Sequence[Sequence]):
    """Monic closed-loop polynomial from precomputed Plucker data."""
    combined = closed_loop_from_plucker(P, K)
    if isinstance(combined, RatPoly):
        if combined.degree != P.n:
            raise PoleplaceError("closed loop lost its top degree; degenerate gain data")
        return combined.monic()
    arr = np.asarray(combined)
    if arr.size != P.n + 1 or arr[-1] == 0:
        raise PoleplaceError("closed loop lost its top degree; degenerate gain data")
    return arr / arr[-1]


# ---------------------------------------------------------------------------
# Fiber systems
# ---------------------------------------------------------------------------

ROOT_EVAL = "root_eval"
COEFF_MATCH = "coeff_match"


@dataclass(frozen=True, eq=False)
class FiberSystem:
    """A polynomial system in the mp gain entries cutting out a target fiber.

    Equations share one monomial basis: ``exponents[k]`` is the exponent
    vector of monomial k over the row-major gain variables, and
    ``coeffs[i, k]`` its coefficient in equation i.  ``scale`` holds each
    equation's max absolute coefficient, the normalizer for residuals.
    """

    m: int
    p: int
    n: int
    exponents: np.ndarray  # (n_mono, num_vars) small non-negative ints
    coeffs: np.ndarray  # (n_eq, n_mono) complex
    degrees: tuple[int, ...]
    provenance: str
    scale: np.ndarray  # (n_eq,) float
    real_coefficients: bool
    # derivative helper tables, precomputed once
    _dexp: np.ndarray = field(repr=False, default=None)  # (num_vars, n_mono, num_vars)
    _dfac: np.ndarray = field(repr=False, default=None)  # (num_vars, n_mono)

    @property
    def num_vars(self) -> int:
        return self.m * self.p

    @property
    def num_equations(self) -> int:
        return self.coeffs.shape[0]

    @property
    def is_square(self) -> bool:
        return self.num_equations == self.num_vars

    def var_name(self, v: int) -> str:
        return f"K[{v // self.p}][{v % self.p}]"

    # -- evaluation (batched over points; a single point is a batch of 1) --

    def monomials(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.prod(X[:, None, :] ** self.exponents[None, :, :], axis=2)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Equation values at one point (1-d input) or a batch (2-d input)."""
        single = np.ndim(x) == 1
        vals = self.monomials(np.asarray(x, dtype=complex)) @ self.coeffs.T
        return vals[0] if single else vals

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        single = np.ndim(x) == 1
        X = np.atleast_2d(np.asarray(x, dtype=complex))
        # dmono[b, k, v] = d(monomial k)/d(var v) at X[b]
        powers = X[:, None, None, :] ** self._dexp[None, :, :, :]
        dmono = self._dfac[None, :, :].transpose(0, 2, 1) * np.prod(powers, axis=3).transpose(
            0, 2, 1
        )
        J = np.einsum("ek,bkv->bev", self.coeffs, dmono)
        return J[0] if single else J

    def residual(self, x: np.ndarray) -> float | np.ndarray:
        """Max normalized residual: |F_i(x)| / (scale_i * (1 + |x|_inf)^deg_i).

        Scale-free in both the equation coefficients and the point magnitude.
        """
        single = np.ndim(x) == 1
        X = np.atleast_2d(np.asarray(x, dtype=complex))
        vals = np.abs(self.evaluate(X))
        grow = (1.0 + np.max(np.abs(X), axis=1))[:, None] ** np.array(self.degrees)[None, :]
        res = np.max(vals / (self.scale[None, :] * grow), axis=1)
        return float(res[0]) if single else res


def _finalize_fiber(
    m: int, p: int, n: int, equations: list[dict], provenance: str
) -> FiberSystem:
    """Convert exact equation dicts (monomial tuple -> coefficient) to arrays."""
    monomials = sorted({mono for eq in equations for mono in eq}, key=lambda t: (len(t), t))
    if not monomials:
        raise PoleplaceError("fiber system has no equations with content")
    nv = m * p
    index = {mono: k for k, mono in enumerate(monomials)}
    E = np.zeros((len(monomials), nv), dtype=np.int64)
    for mono, k in index.items():
        for v in mono:
            E[k, v] += 1
    C = np.zeros((len(equations), len(monomials)), dtype=complex)
    real = True
    for i, eq in enumerate(equations):
        for mono, c in eq.items():
            if isinstance(c, Fraction):
                C[i, index[mono]] = float(c)
            else:
                C[i, index[mono]] = complex(c)
                if abs(complex(c).imag) > 0:
                    real = False
    degrees = tuple(
        int(max(E[np.nonzero(C[i])[0]].sum(axis=1), default=0)) if np.any(C[i]) else 0
        for i in range(len(equations))
    )
    scale = np.maximum(np.abs(C).max(axis=1), 1e-300)
    # derivative tables: reduced exponents and multiplicative factors per var
    nv_mono = len(monomials)
    dexp = np.zeros((nv, nv_mono, nv), dtype=np.int64)
    dfac = np.zeros((nv, nv_mono), dtype=np.int64)
    for v in range(nv):
        reduced = E.copy()
        dfac[v] = E[:, v]
        reduced[:, v] = np.maximum(E[:, v] - 1, 0)
        dexp[v] = reduced
    return FiberSystem(
        m=m,
        p=p,
        n=n,
        exponents=E,
        coeffs=C,
        degrees=degrees,
        provenance=provenance,
        scale=scale,
        real_coefficients=real,
        _dexp=dexp,
        _dfac=dfac,
    )


def build_fiber_system(
    plant: PlantModel, target: TargetPoly, mode: str = ROOT_EVAL
) -> FiberSystem:
    """Assemble the fiber system of a plant over a target polynomial.

    Root evaluation writes one equation per target root; coefficient matching
    writes one equation per non-leading coefficient.  Both cut out the same
    set when the roots are distinct.  The result is square exactly when
    n = mp; non-square systems are buildable but rejected by the solver.
    """
    if mode not in (ROOT_EVAL, COEFF_MATCH):
        raise PoleplaceError(f"unknown fiber mode {mode!r}")
    if target.n != plant.n:
        raise PoleplaceError(f"target degree {target.n} != plant order {plant.n}")
    if mode == ROOT_EVAL:
        if target.roots is None:
            raise UnsupportedInputError(
                "root evaluation needs the target's roots; use coefficient matching "
                "for targets given by coefficients"
            )
        if len(set(target.roots)) != len(target.roots):
            raise UnsupportedInputError(
                "root evaluation needs distinct roots; use coefficient matching"
            )
    elif target.poly is None:
        raise UnsupportedInputError("coefficient matching needs an exact target polynomial")

    if plant.mfd is not None:
        equations = _fiber_equations_from_mfd(plant, target, mode)
    else:
        equations = _fiber_equations_from_state(plant, target, mode)
    return _finalize_fiber(plant.m, plant.p, plant.n, equations, mode)


def _fiber_equations_from_mfd(plant: PlantModel, target: TargetPoly, mode: str) -> list[dict]:
    D, N = plant.mfd
    P = plucker_of_mfd(D, N)
    sym = [gain_minor_symbolic(alpha, P.m, P.p) for alpha in P.subsets]
    if mode == ROOT_EVAL:
        equations = []
        for s_i in target.roots:
            eq: dict = {}
            for g, smin in zip(P.coords, sym):
                g_val = g(s_i)  # exact for Fraction roots, complex otherwise
                if g_val == 0:
                    continue
                for mono, c in smin.items():
                    eq[mono] = eq.get(mono, 0) + g_val * c
            equations.append(eq)
        return equations
    # coefficient matching against the target scaled by the lead coefficient,
    # so the degree-n terms cancel identically
    lc = P.lead_coord.leading_coeff
    scaled_target = target.poly * lc
    equations = []
    for j in range(P.n):
        eq = {(): -scaled_target.coeff(j)}
        for g, smin in zip(P.coords, sym):
            gj = g.coeff(j)
            if gj == 0:
                continue
            for mono, c in smin.items():
                eq[mono] = eq.get(mono, 0) + gj * c
        equations.append({mono: c for mono, c in eq.items() if c != 0})
    return equations


def _fiber_equations_from_state(plant: PlantModel, target: TargetPoly, mode: str) -> list[dict]:
    """Fiber equations straight from (A, B, C), no MFD required.

    The closed-loop polynomial in the gain entries is recovered exactly by
    evaluating det(xI - A) * det(I - K C(xI - A)^{-1} B) symbolically in K at
    n+1 rational nodes and interpolating each monomial coefficient.
    """
    A, B, C = plant.state_space
    n, m, p = plant.n, plant.m, plant.p
    chi_a = char_poly(A)
    nodes = _sample_points(n + 1, chi_a)
    per_node: list[dict] = []
    for x0 in nodes:
        sI_A = [
            [(x0 if i == j else Fraction(0)) - A[i][j] for j in range(n)] for i in range(n)
        ]
        G = qlinalg.matmul(C, qlinalg.solve(sI_A, B))  # p x m, exact
        columns = []
        for c in range(m):
            col = []
            for r in range(m):
                entry: dict = {}
                if r == c:
                    entry[()] = Fraction(1)
                for j in range(p):
                    if G[j][c]:
                        entry[(r * p + j,)] = -G[j][c]
                col.append(entry)
            columns.append(col)
        det_sym = _sym_det(columns, list(range(m)))
        chi_val = chi_a(x0)
        per_node.append({mono: chi_val * c for mono, c in det_sym.items()})
    all_monos = sorted({mono for d in per_node for mono in d}, key=lambda t: (len(t), t))
    coeff_polys: dict[tuple, RatPoly] = {}
    for mono in all_monos:
        pts = [(x0, d.get(mono, Fraction(0))) for x0, d in zip(nodes, per_node)]
        coeff_polys[mono] = interpolate(pts)
    if mode == ROOT_EVAL:
        return [
            {
                mono: cp(s_i)
                for mono, cp in coeff_polys.items()
                if cp(s_i) != 0
            }
            for s_i in target.roots
        ]
    equations = []
    for j in range(n):
        eq = {mono: cp.coeff(j) for mono, cp in coeff_polys.items() if cp.coeff(j) != 0}
        eq[()] = eq.get((), Fraction(0)) - target.poly.coeff(j)
        equations.append({mono: c for mono, c in eq.items() if c != 0})
    return equations
