"""A two-variable objective on which eigenvalue clamping degenerates.

The function measures squared distance-to-unit-circle around centers
(-1, 0) and (1, 0); near a center one curvature direction is hugely
negative, and clamping it to a small positive number blows the Newton step
up along that eigenvector.  Used as the regression anchor for the filters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .projection import NoProjection, ProjectionStrategy, project_symmetric
from .scenario import SolveSettings
from .solver import (
    FactorizationError,
    LineSearchError,
    SolveStatus,
    backtracking_line_search,
)

CENTERS = (np.array([-1.0, 0.0]), np.array([1.0, 0.0]))
_CENTER_EPS = 0.0  # derivatives are undefined exactly at the centers


class ToyState(NamedTuple):
    x: float
    y: float


def _as_point(p) -> np.ndarray:
    a = np.asarray(p, dtype=np.float64).reshape(2)
    if not np.isfinite(a).all():
        raise ValueError(f"non-finite point: {p!r}")
    return a


def _check_differentiable(p: np.ndarray) -> None:
    for c in CENTERS:
        if np.hypot(*(p - c)) <= _CENTER_EPS:
            raise ValueError(
                f"derivatives are undefined at circle center {tuple(c)}"
            )


def toy_f(p) -> float:
    p = _as_point(p)
    total = 0.0
    for c in CENTERS:
        r = np.hypot(*(p - c))
        total += (r - 1.0) ** 2
    return float(total)


def toy_grad(p) -> np.ndarray:
    p = _as_point(p)
    _check_differentiable(p)
    g = np.zeros(2)
    for c in CENTERS:
        delta = p - c
        r = np.hypot(*delta)
        g += 2.0 * (r - 1.0) * delta / r
    return g


def toy_hess(p) -> np.ndarray:
    p = _as_point(p)
    _check_differentiable(p)
    h = np.zeros((2, 2))
    eye = np.eye(2)
    for c in CENTERS:
        delta = p - c
        r = np.hypot(*delta)
        n = delta / r
        outer = np.outer(n, n)
        h += 2.0 * outer + 2.0 * (r - 1.0) / r * (eye - outer)
    return h


@dataclass(frozen=True)
class ToyTrajectory:
    points: list
    energies: list
    status: SolveStatus

    @property
    def iterations(self) -> int:
        return len(self.points) - 1

    @property
    def final_f(self) -> float:
        return self.energies[-1]


def run_toy_newton(
    start,
    strategy: ProjectionStrategy,
    tol: float = 1e-10,
    max_iters: int = 100,
    settings: SolveSettings | None = None,
) -> ToyTrajectory:
    """Projected Newton on the toy objective, dense 2x2.

    Shares the solver's line search and decrement test; the trajectory
    includes the start point, so ``iterations`` counts accepted steps.
    """
    if settings is None:
        settings = SolveSettings()
    x = _as_point(start)
    points = [x.copy()]
    energies = [toy_f(x)]
    status = SolveStatus.MAX_ITERS
    f_cur = energies[0]
    for _ in range(max_iters):
        g = toy_grad(x)
        h_proj, _ = project_symmetric(toy_hess(x), strategy)
        try:
            d = _toy_direction(h_proj, g, raw=isinstance(strategy, NoProjection))
        except FactorizationError:
            status = SolveStatus.FACTORIZATION_FAILURE
            break
        decrement = -0.5 * float(np.dot(d, g))
        if 0.0 <= decrement < tol:
            status = SolveStatus.CONVERGED
            break
        try:
            alpha, f_cur = backtracking_line_search(
                toy_f, x, d, g, settings, f0=f_cur
            )
        except LineSearchError:
            status = SolveStatus.LINE_SEARCH_FAILURE
            break
        x = x + alpha * d
        points.append(x.copy())
        energies.append(f_cur)
    return ToyTrajectory(points, energies, status)


def _toy_direction(h: np.ndarray, g: np.ndarray, raw: bool) -> np.ndarray:
    if raw:
        try:
            return np.linalg.solve(h, -g)
        except np.linalg.LinAlgError as exc:
            raise FactorizationError(str(exc)) from exc
    scale = max(float(np.abs(np.diag(h)).mean()), np.finfo(float).tiny)
    beta = 0.0
    for _ in range(30):
        try:
            low = np.linalg.cholesky(h + beta * scale * np.eye(2))
        except np.linalg.LinAlgError:
            beta = 1e-10 if beta == 0.0 else beta * 2.0
            continue
        y = np.linalg.solve(low, -g)
        return np.linalg.solve(low.T, y)
    raise FactorizationError("2x2 system never became PD")
