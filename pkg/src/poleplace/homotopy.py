"""Total-degree homotopy continuation for square polynomial systems.

The start system {x_i^(d_i) - 1} deforms into the target system F along

    H(x, t) = gamma * (1 - t) * G(x) + t * F(x)

with gamma a seeded random unit-modulus constant, which keeps the paths
smooth and disjoint with probability one.  All Bezout-many start points are
tracked by an adaptive Euler-predictor / damped-Newton-corrector loop, then
polished on F itself, residual-certified, deduplicated, and classified.

Residuals are always normalized per equation by the equation's coefficient
scale and by (1 + |x|_inf)^degree, so acceptance thresholds are scale-free
in both the coefficients and the point magnitude.
"""

from __future__ import annotations

import cmath
import itertools
import math
import os
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConsistencyError, PoleplaceError

THREADS_ENV_VAR = "POLEPLACE_THREADS"


@dataclass(frozen=True)
class TrackerConfig:
    """Knobs for the path tracker; defaults handle every instance in the tests."""

    seed: int = 0
    gamma: Optional[complex] = None  # derived from seed when omitted
    step_init: float = 0.05
    step_min: float = 1e-10
    step_max: float = 0.25
    newton_tol: float = 1e-10
    newton_max_iters: int = 10
    divergence_norm: float = 1e10
    dedupe_tol: float = 1e-6
    real_tol: float = 1e-8
    accept_tol: float = 1e-8
    endgame_offset: float = 1e-8  # paths stop stepping at t = 1 - offset
    blowup_norm: float = 1e5  # endpoint norm that brands a stalled path divergent
    threads: Optional[int] = None  # None: POLEPLACE_THREADS env var, else 1

    def __post_init__(self):
        if not (0 < self.step_min <= self.step_init <= self.step_max < 1):
            raise PoleplaceError("need 0 < step_min <= step_init <= step_max < 1")
        for name in ("newton_tol", "divergence_norm", "dedupe_tol", "real_tol", "accept_tol"):
            if getattr(self, name) <= 0:
                raise PoleplaceError(f"{name} must be positive")
        if self.gamma is not None and abs(self.gamma) == 0:
            raise PoleplaceError("gamma must be nonzero")

    def resolved_gamma(self) -> complex:
        if self.gamma is not None:
            return complex(self.gamma)
        return cmath.exp(2j * math.pi * random.Random(self.seed).random())

    def resolved_threads(self) -> int:
        if self.threads is not None:
            return max(1, self.threads)
        return max(1, int(os.environ.get(THREADS_ENV_VAR, "1")))


class PathStatus(Enum):
    CONVERGED = "converged"
    DIVERGENT = "divergent"
    FAILED = "failed"


_ACTIVE, _REACHED, _DIVERGED, _FAILED = -1, 0, 1, 2


@dataclass(frozen=True)
class PathResult:
    status: PathStatus
    point: Optional[np.ndarray]
    t_reached: float
    steps: int


@dataclass(frozen=True, eq=False)
class StartSystem:
    """The start system x_i^(d_i) - 1 = 0, equation i paired with variable i."""

    degrees: tuple[int, ...]

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        d = np.array(self.degrees)
        return X ** d[None, :] - 1.0

    def jacobian(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        k, nv = X.shape
        d = np.array(self.degrees)
        J = np.zeros((k, nv, nv), dtype=complex)
        idx = np.arange(nv)
        J[:, idx, idx] = d[None, :] * X ** np.maximum(d - 1, 0)[None, :]
        return J

    def roots(self) -> np.ndarray:
        """All product combinations of d_i-th roots of unity, in product order."""
        per_var = [
            [cmath.exp(2j * math.pi * k / d) for k in range(d)] for d in self.degrees
        ]
        return np.array(list(itertools.product(*per_var)), dtype=complex)


def total_degree_start(system, config: Optional[TrackerConfig] = None):
    """Start system and its full solution grid for a square target system.

    The number of start points is the Bezout bound, the product of the
    equation degrees.
    """
    del config  # the start construction has no tunables; kept for symmetry
    if not system.is_square:
        raise PoleplaceError(
            f"total-degree start needs a square system, got "
            f"{system.num_equations} equations in {system.num_vars} variables"
        )
    degrees = tuple(system.degrees)
    if any(d < 1 for d in degrees):
        raise PoleplaceError(
            "a fiber equation has degree 0: the fiber is empty or degenerate"
        )
    start = StartSystem(degrees)
    return start, start.roots()


def bezout_bound(system) -> int:
    return int(np.prod(system.degrees, dtype=np.int64))


@dataclass(frozen=True, eq=False)
class Homotopy:
    """gamma (1-t) G(x) + t F(x) with F scaled to unit coefficient size."""

    target: object  # duck-typed: evaluate / jacobian / scale / degrees
    start: StartSystem
    gamma: complex

    def __post_init__(self):
        object.__setattr__(self, "degrees", np.array(self.target.degrees, dtype=float))
        object.__setattr__(self, "_scale", np.asarray(self.target.scale))

    def f(self, X: np.ndarray) -> np.ndarray:
        return self.target.evaluate(np.atleast_2d(X)) / self._scale[None, :]

    def jf(self, X: np.ndarray) -> np.ndarray:
        return self.target.jacobian(np.atleast_2d(X)) / self._scale[None, :, None]

    def h(self, X: np.ndarray, T: np.ndarray) -> np.ndarray:
        g = self.start.evaluate(X)
        return self.gamma * (1.0 - T)[:, None] * g + T[:, None] * self.f(X)

    def hx(self, X: np.ndarray, T: np.ndarray) -> np.ndarray:
        jg = self.start.jacobian(X)
        return self.gamma * (1.0 - T)[:, None, None] * jg + T[:, None, None] * self.jf(X)

    def ht(self, X: np.ndarray) -> np.ndarray:
        return self.f(X) - self.gamma * self.start.evaluate(X)


def make_homotopy(system, config: TrackerConfig) -> tuple[Homotopy, np.ndarray]:
    start, points = total_degree_start(system, config)
    return Homotopy(target=system, start=start, gamma=config.resolved_gamma()), points


# ---------------------------------------------------------------------------
# Batched numerics
# ---------------------------------------------------------------------------


def _scaled_res(vals: np.ndarray, X: np.ndarray, degrees: np.ndarray) -> np.ndarray:
    """Max per-path residual normalized by (1 + |x|_inf)^degree."""
    grow = (1.0 + np.max(np.abs(X), axis=1))[:, None] ** degrees[None, :]
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        r = np.max(np.abs(vals) / grow, axis=1)
    return np.where(np.isfinite(r), r, np.inf)


def _batch_solve(J: np.ndarray, R: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Solve J dx = R per batch member; flags members where the solve failed."""
    finite = np.isfinite(J).all(axis=(1, 2)) & np.isfinite(R).all(axis=1)
    out = np.zeros_like(R)
    ok = finite.copy()
    if finite.all():
        try:
            out = np.linalg.solve(J, R[..., None])[..., 0]
            bad = ~np.isfinite(out).all(axis=1)
            ok[bad] = False
            out[bad] = 0
            return out, ok
        except np.linalg.LinAlgError:
            out = np.zeros_like(R)
    for i in range(len(J)):
        if not finite[i]:
            continue
        try:
            sol = np.linalg.solve(J[i], R[i])
            if np.isfinite(sol).all():
                out[i] = sol
            else:
                ok[i] = False
        except np.linalg.LinAlgError:
            ok[i] = False
    return out, ok


# Evaluators receive (points, indices-into-the-original-batch) so callers can
# attach per-path context such as the path parameter t.
BatchEval = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _newton_batch(
    f_eval: BatchEval,
    j_eval: BatchEval,
    X: np.ndarray,
    degrees: np.ndarray,
    tol: float,
    max_iters: int,
):
    """Damped Newton on a batch; returns (converged, X, residuals).

    Each iteration tries the full step, then up to two halvings; paths that
    cannot decrease their residual stall and are left unconverged.
    """
    X = np.array(X, dtype=complex)
    all_idx = np.arange(len(X))
    res = _scaled_res(f_eval(X, all_idx), X, degrees)
    conv = res < tol
    stalled = np.zeros(len(X), dtype=bool)
    for _ in range(max_iters):
        todo = ~conv & ~stalled & np.isfinite(res)
        if not todo.any():
            break
        idx = np.flatnonzero(todo)
        Xt = X[idx]
        J = j_eval(Xt, idx)
        R = f_eval(Xt, idx)
        dx, ok = _batch_solve(J, -R)

        X_try = Xt + dx
        r_try = _scaled_res(f_eval(X_try, idx), X_try, degrees)
        improved = ok & (r_try < res[idx])
        need = ok & ~improved
        lam = 0.5
        while need.any() and lam >= 0.2:
            sub = np.flatnonzero(need)
            X_half = Xt[sub] + lam * dx[sub]
            r_half = _scaled_res(f_eval(X_half, idx[sub]), X_half, degrees)
            better = r_half < res[idx[sub]]
            X_try[sub[better]] = X_half[better]
            r_try[sub[better]] = r_half[better]
            improved[sub[better]] = True
            need[sub[better]] = False
            lam *= 0.5

        X[idx[improved]] = X_try[improved]
        res[idx[improved]] = r_try[improved]
        stalled[idx[~improved]] = True
        conv = res < tol
    return conv, X, res


# ---------------------------------------------------------------------------
# Tracking
# ---------------------------------------------------------------------------

_MAX_STEP_ATTEMPTS = 5000  # hard per-path cap; generous for every tested size


def _track_batch(hom: Homotopy, starts: np.ndarray, config: TrackerConfig):
    """Track a batch of paths; returns (status, endpoints, t, attempt counts).

    Statuses: 0 reached the endgame boundary, 1 divergent, 2 failed.
    Endpoints still need the final polish on the target system.
    """
    P = len(starts)
    X = np.array(starts, dtype=complex)
    T = np.zeros(P)
    DT = np.full(P, config.step_init)
    consec = np.zeros(P, dtype=np.int64)
    attempts = np.zeros(P, dtype=np.int64)
    status = np.full(P, _ACTIVE, dtype=np.int64)
    t_end = 1.0 - config.endgame_offset

    while True:
        active = np.flatnonzero(status == _ACTIVE)
        if active.size == 0:
            break
        x = X[active]
        t = T[active]
        dt = np.minimum(DT[active], t_end - t)

        # Euler predictor along dx/dt = -Hx^{-1} Ht
        v, pred_ok = _batch_solve(hom.hx(x, t), -hom.ht(x))
        x_pred = x + dt[:, None] * v
        t_new = t + dt

        # damped Newton corrector at the predicted parameter values
        conv, x_corr, _ = _newton_batch(
            lambda Z, i: hom.h(Z, t_new[i]),
            lambda Z, i: hom.hx(Z, t_new[i]),
            x_pred,
            hom.degrees,
            config.newton_tol,
            config.newton_max_iters,
        )
        success = conv & pred_ok
        attempts[active] += 1

        adv = active[success]
        X[adv] = x_corr[success]
        T[adv] = t_new[success]
        consec[adv] += 1
        grow = consec[adv] >= 3
        DT[adv[grow]] = np.minimum(DT[adv[grow]] * 1.5, config.step_max)
        consec[adv[grow]] = 0

        fail = active[~success]
        DT[fail] *= 0.5
        consec[fail] = 0

        norms = np.max(np.abs(X[active]), axis=1)
        pending = status[active] == _ACTIVE

        diverged = pending & (norms > config.divergence_norm)
        status[active[diverged]] = _DIVERGED
        pending &= ~diverged

        underflow = pending & (DT[active] < config.step_min)
        overrun = pending & (attempts[active] > _MAX_STEP_ATTEMPTS)
        stopped = underflow | overrun
        status[active[stopped & (norms > config.blowup_norm)]] = _DIVERGED
        status[active[stopped & ~(norms > config.blowup_norm)]] = _FAILED
        pending &= ~stopped

        reached = pending & (T[active] >= t_end - 1e-14)
        status[active[reached]] = _REACHED

    return status, X, T, attempts


def track_path(start: Sequence[complex], hom: Homotopy, config: TrackerConfig) -> PathResult:
    """Track one start point of the homotopy to t = 1.

    Returns the polished endpoint on convergence, or a divergent/failed tag.
    Single-path form of the batched engine behind solve_system; both share
    the same stepping rules.
    """
    status, X, T, attempts = _track_batch(hom, np.array([start], dtype=complex), config)
    steps = int(attempts[0])
    if status[0] == _REACHED:
        conv, Xp, _ = _newton_batch(
            lambda Z, i: hom.f(Z),
            lambda Z, i: hom.jf(Z),
            X[:1],
            hom.degrees,
            config.newton_tol,
            2 * config.newton_max_iters,
        )
        if conv[0]:
            return PathResult(PathStatus.CONVERGED, Xp[0], 1.0, steps)
        if np.max(np.abs(Xp[0])) > config.blowup_norm:
            return PathResult(PathStatus.DIVERGENT, None, float(T[0]), steps)
        return PathResult(PathStatus.FAILED, None, float(T[0]), steps)
    if status[0] == _DIVERGED:
        return PathResult(PathStatus.DIVERGENT, None, float(T[0]), steps)
    return PathResult(PathStatus.FAILED, None, float(T[0]), steps)


# ---------------------------------------------------------------------------
# Solutions
# ---------------------------------------------------------------------------


@dataclass
class Solution:
    """One deduplicated endpoint of the fiber computation."""

    K: np.ndarray  # m x p complex gain
    residual: float
    is_real: bool
    conjugate_partner: Optional[int]
    path_id: int
    multiplicity: int = 1

    def flat(self) -> np.ndarray:
        return self.K.reshape(-1)


@dataclass
class SolutionSet:
    solutions: list[Solution]
    paths_tracked: int
    paths_diverged: int
    paths_failed: int
    bezout_bound: int
    warnings: list[str] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.solutions)

    @property
    def num_real(self) -> int:
        return sum(1 for s in self.solutions if s.is_real)

    @property
    def num_complex(self) -> int:
        return self.count - self.num_real

    @property
    def conjugate_pairs(self) -> int:
        return sum(1 for s in self.solutions if s.conjugate_partner is not None) // 2

    @property
    def max_residual(self) -> float:
        return max((s.residual for s in self.solutions), default=0.0)


def _is_real_point(x: np.ndarray, real_tol: float) -> bool:
    denom = 1.0 + float(np.max(np.abs(x)))
    return float(np.max(np.abs(x.imag))) / denom < real_tol


def _cluster(points: list[np.ndarray], tol: float) -> list[list[int]]:
    """Union-find clustering under relative max-norm distance below tol."""
    parent = list(range(len(points)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            denom = 1.0 + max(np.max(np.abs(points[i])), np.max(np.abs(points[j])))
            if np.max(np.abs(points[i] - points[j])) / denom < tol:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri
    groups: dict[int, list[int]] = {}
    for i in range(len(points)):
        groups.setdefault(find(i), []).append(i)
    return [groups[r] for r in sorted(groups, key=lambda r: min(groups[r]))]


def solve_system(
    system, config: Optional[TrackerConfig] = None, max_paths: Optional[int] = None
) -> SolutionSet:
    """Track every total-degree path of a square fiber system and classify.

    Endpoints are Newton-polished on the target system, certified against
    the acceptance residual, deduplicated within the relative cluster radius,
    and conjugate-paired when the input coefficients are real.  Path tracking
    is embarrassingly parallel; with threads > 1 the start grid is split into
    contiguous chunks whose results merge back in order, so the outcome is
    independent of scheduling.

    ``max_paths`` truncates the start grid; useful only for harness
    self-tests, since it forfeits the completeness guarantee.
    """
    config = config or TrackerConfig()
    hom, starts = make_homotopy(system, config)
    if max_paths is not None:
        starts = starts[:max_paths]
    return _solve_with_starts(system, hom, starts, config)


def _solve_with_starts(
    system, hom: Homotopy, starts: np.ndarray, config: TrackerConfig
) -> SolutionSet:
    nthreads = config.resolved_threads()
    if nthreads > 1 and len(starts) >= 2 * nthreads:
        chunks = np.array_split(starts, nthreads)
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            parts = list(pool.map(lambda c: _track_batch(hom, c, config), chunks))
        status = np.concatenate([p[0] for p in parts])
        X = np.concatenate([p[1] for p in parts])
    else:
        status, X, _, _ = _track_batch(hom, starts, config)

    warnings: list[str] = []
    reached = np.flatnonzero(status == _REACHED)
    diverged = int(np.sum(status == _DIVERGED))
    failed = int(np.sum(status == _FAILED))

    endpoints: list[np.ndarray] = []
    path_ids: list[int] = []
    if reached.size:
        conv, Xp, _ = _newton_batch(
            lambda Z, i: hom.f(Z),
            lambda Z, i: hom.jf(Z),
            X[reached],
            hom.degrees,
            config.newton_tol,
            2 * config.newton_max_iters,
        )
        final_res = np.atleast_1d(system.residual(Xp))
        for k, pid in enumerate(reached):
            if conv[k] and final_res[k] < config.accept_tol:
                endpoints.append(Xp[k])
                path_ids.append(int(pid))
            elif np.max(np.abs(Xp[k])) > config.blowup_norm:
                diverged += 1
            else:
                failed += 1

    if failed:
        warnings.append(f"{failed} path(s) failed; solution set may be incomplete")

    bound = bezout_bound(system)
    clusters = _cluster(endpoints, config.dedupe_tol)
    if len(clusters) > bound:
        raise ConsistencyError(
            f"found {len(clusters)} distinct endpoints, above the Bezout bound {bound}"
        )

    residuals = np.atleast_1d(system.residual(np.array(endpoints))) if endpoints else []
    solutions: list[Solution] = []
    for members in clusters:
        rep = min(members, key=lambda i: residuals[i])
        x = endpoints[rep]
        solutions.append(
            Solution(
                K=x.reshape(system.m, system.p).copy(),
                residual=float(residuals[rep]),
                is_real=_is_real_point(x, config.real_tol),
                conjugate_partner=None,
                path_id=path_ids[rep],
                multiplicity=len(members),
            )
        )

    solutions.sort(key=_canonical_key)
    if getattr(system, "real_coefficients", False):
        _pair_conjugates(solutions, config, warnings)

    return SolutionSet(
        solutions=solutions,
        paths_tracked=len(starts),
        paths_diverged=diverged,
        paths_failed=failed,
        bezout_bound=bound,
        warnings=warnings,
    )


def _canonical_key(sol: Solution):
    flat = sol.flat()
    return tuple(round(float(v.real), 8) for v in flat) + tuple(
        round(float(v.imag), 8) for v in flat
    )


def _pair_conjugates(solutions: list[Solution], config: TrackerConfig, warnings: list[str]):
    unpaired = [i for i, s in enumerate(solutions) if not s.is_real]
    used: set[int] = set()
    for i in unpaired:
        if i in used:
            continue
        xi = np.conj(solutions[i].flat())
        best, best_d = None, np.inf
        for j in unpaired:
            if j == i or j in used:
                continue
            xj = solutions[j].flat()
            denom = 1.0 + max(np.max(np.abs(xi)), np.max(np.abs(xj)))
            d = np.max(np.abs(xi - xj)) / denom
            if d < best_d:
                best, best_d = j, d
        if best is not None and best_d < config.dedupe_tol:
            solutions[i].conjugate_partner = best
            solutions[best].conjugate_partner = i
            used.update((i, best))
        else:
            used.add(i)
            warnings.append(
                f"non-real solution {i} has no conjugate partner within tolerance"
            )


def classify_real(
    solution_set: SolutionSet, config: Optional[TrackerConfig] = None
) -> tuple[int, int, list[tuple[int, int]]]:
    """Real/complex split and the matched conjugate pairs of a solved set."""
    del config  # classification was fixed at solve time; kept for call symmetry
    pairs = sorted(
        {
            (min(i, s.conjugate_partner), max(i, s.conjugate_partner))
            for i, s in enumerate(solution_set.solutions)
            if s.conjugate_partner is not None
        }
    )
    return solution_set.num_real, solution_set.num_complex, pairs
