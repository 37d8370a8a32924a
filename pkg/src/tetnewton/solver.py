"""Global assembly, sparse/dense SPD solves and the projected-Newton loop.

One Newton iteration: evaluate gradient, build the (strategy-filtered)
Hessian over the free DOFs, solve for the step, check the decrement
-0.5 d.g against the tolerance, then backtrack along d until the energy
drops.  The per-element filters guarantee a PSD system by construction;
the global strategies instead decide what to do after looking at (or
failing to factorize) the assembled matrix.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Union

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .projection import (
    FILTER_NONE,
    EigAbs,
    EigClamp,
    GlobalAbs,
    GlobalShift,
    LocalShift,
    NoProjection,
    OnDemand,
    Strategy,
    filter_code,
    project_blocks,
)
from .scenario import Scenario, SolveSettings

# Free-DOF count below which factorizations use dense LAPACK (exact PD
# detection); above it, SuperLU in symmetric mode with a positive-pivot
# check stands in for a sparse Cholesky.
DENSE_SOLVE_CUTOFF = 2048


class SolveStatus(Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"
    LINE_SEARCH_FAILURE = "LineSearchFailure"
    FACTORIZATION_FAILURE = "FactorizationFailure"


class FactorizationError(RuntimeError):
    """No positive-definite factorization could be obtained."""


class LineSearchError(RuntimeError):
    """Backtracking found no step with sufficient decrease."""


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    energy: float
    decrement: float
    step_size: float
    negative_elements: int
    wall_ms: float


@dataclass(frozen=True)
class SolveReport:
    records: list
    status: SolveStatus
    final_positions: np.ndarray

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def converged(self) -> bool:
        return self.status is SolveStatus.CONVERGED

    @property
    def final_energy(self) -> float:
        return self.records[-1].energy if self.records else np.nan

    @property
    def total_wall_ms(self) -> float:
        return float(sum(r.wall_ms for r in self.records))


class _System:
    """Scenario bound to the kernel backend with a precomputed assembly plan."""

    def __init__(self, scenario: Scenario):
        mesh = scenario.mesh
        mat = scenario.material
        self.mesh = mesh
        self.mu, self.lam, self.model = mat.mu, mat.lam, mat.model_code
        self.base = np.array(scenario.initial_positions)
        self.free = scenario.free_vertices
        self.n_free_dofs = 3 * self.free.size

        n_dofs = 3 * mesh.num_vertices
        m = mesh.num_tets
        edof = (3 * mesh.tets[:, :, None] + np.arange(3)).reshape(m, 12)
        rows = np.broadcast_to(edof[:, :, None], (m, 12, 12)).ravel()
        cols = np.broadcast_to(edof[:, None, :], (m, 12, 12)).ravel()
        fmap = np.full(n_dofs, -1, dtype=np.int64)
        free_dofs = (3 * self.free[:, None] + np.arange(3)).ravel()
        fmap[free_dofs] = np.arange(self.n_free_dofs)
        r, c = fmap[rows], fmap[cols]
        self._keep = (r >= 0) & (c >= 0)
        self._rows = r[self._keep]
        self._cols = c[self._keep]

    def positions(self, x_free: np.ndarray) -> np.ndarray:
        p = self.base.copy()
        p[self.free] = x_free.reshape(-1, 3)
        return p

    def initial_free(self) -> np.ndarray:
        return self.base[self.free].ravel().copy()

    def energy(self, x_free: np.ndarray) -> float:
        return kernels.total_energy(
            self.positions(x_free),
            self.mesh.tets,
            self.mesh.rest_shape_inv,
            self.mesh.rest_volume,
            self.mu,
            self.lam,
            self.model,
        )

    def energy_gradient(self, x_free: np.ndarray):
        energy, grad = kernels.energy_gradient(
            self.positions(x_free),
            self.mesh.tets,
            self.mesh.rest_shape_inv,
            self.mesh.rest_volume,
            self.mu,
            self.lam,
            self.model,
        )
        return energy, grad[self.free].ravel()

    def hessian_blocks(self, x_free: np.ndarray, mode: int, eps: float):
        blocks, counts = kernels.element_hessians(
            self.positions(x_free),
            self.mesh.tets,
            self.mesh.rest_shape_inv,
            self.mesh.rest_volume,
            self.mu,
            self.lam,
            self.model,
            mode,
            eps,
        )
        bad = ~np.isfinite(blocks).all(axis=(1, 2))
        if bad.any():
            raise ValueError(
                f"element {int(np.argmax(bad))} produced a non-finite Hessian"
            )
        return blocks, counts

    def assemble(self, blocks: np.ndarray) -> sp.csr_matrix:
        vals = blocks.ravel()[self._keep]
        mat = sp.coo_matrix(
            (vals, (self._rows, self._cols)),
            shape=(self.n_free_dofs, self.n_free_dofs),
        )
        return mat.tocsr()


def _try_spd_factor(h) -> Optional[Callable[[np.ndarray], np.ndarray]]:
    """A solve callable if a PD factorization succeeds, else None."""
    n = h.shape[0]
    if n <= DENSE_SOLVE_CUTOFF:
        dense = h.toarray() if sp.issparse(h) else np.asarray(h)
        try:
            factor = sla.cho_factor(dense, lower=True, check_finite=False)
        except sla.LinAlgError:
            return None
        return lambda b: sla.cho_solve(factor, b, check_finite=False)
    try:
        lu = spla.splu(
            sp.csc_matrix(h), diag_pivot_thresh=0.0, options=dict(SymmetricMode=True)
        )
    except RuntimeError:
        return None
    if (lu.U.diagonal() <= 0.0).any():
        return None
    return lu.solve


def _identity_like(h):
    n = h.shape[0]
    return sp.identity(n, format="csr") if sp.issparse(h) else np.eye(n)


def _diag_scale(h) -> float:
    d = h.diagonal().mean()
    return float(d) if d > 0.0 else 1.0


def newton_direction(h, g: np.ndarray) -> np.ndarray:
    """Solve h d = -g with a direct SPD factorization.

    If the first factorization fails (the filters can leave exact zero
    eigenvalues), retries with h + beta*mean(diag)*I for beta doubling from
    1e-10 up to 1e-2 before giving up.
    """
    solve = _try_spd_factor(h)
    if solve is None:
        eye = _identity_like(h)
        scale = _diag_scale(h)
        beta = 1e-10
        while beta <= 1e-2:
            solve = _try_spd_factor(h + (beta * scale) * eye)
            if solve is not None:
                break
            beta *= 2.0
        else:
            raise FactorizationError(
                "no PD factorization up to beta = 1e-2 * mean(diag)"
            )
    return solve(-g)


def _indefinite_direction(h, g: np.ndarray) -> np.ndarray:
    """Vanilla Newton step through a symmetric-indefinite direct solve."""
    if h.shape[0] <= DENSE_SOLVE_CUTOFF:
        dense = h.toarray() if sp.issparse(h) else np.asarray(h)
        try:
            return sla.solve(dense, -g, assume_a="sym", check_finite=False)
        except (sla.LinAlgError, ValueError) as exc:
            raise FactorizationError(f"indefinite solve failed: {exc}") from exc
    try:
        return spla.splu(sp.csc_matrix(h)).solve(-g)
    except RuntimeError as exc:
        raise FactorizationError(f"indefinite solve failed: {exc}") from exc


def backtracking_line_search(
    energy_fn: Callable[[np.ndarray], float],
    x: np.ndarray,
    d: np.ndarray,
    g: np.ndarray,
    settings: SolveSettings,
    f0: Optional[float] = None,
) -> tuple[float, float]:
    """Largest step in {1, s, s^2, ...} satisfying the Armijo condition.

    Infinite trial energies (inverted elements under log/inverse models)
    fail the condition and shrink the step; no inversion-aware logic beyond
    the energy value itself.
    """
    if f0 is None:
        f0 = energy_fn(x)
    gd = float(np.dot(g, d))
    if not np.isfinite(gd) or gd >= 0.0:
        raise LineSearchError(f"not a descent direction (g.d = {gd:.3g})")
    alpha = 1.0
    for _ in range(settings.ls_max_backtracks):
        f_new = energy_fn(x + alpha * d)
        if np.isfinite(f_new) and f_new <= f0 + settings.ls_c * alpha * gd:
            return alpha, float(f_new)
        alpha *= settings.ls_shrink
    raise LineSearchError(
        f"no acceptable step within {settings.ls_max_backtracks} backtracks"
    )


def _direction_for_strategy(
    system: _System, x_free: np.ndarray, g: np.ndarray, strategy: Strategy
) -> tuple[np.ndarray, int]:
    """Newton direction plus the count of indefinite elements at this state."""
    if isinstance(strategy, (EigClamp, EigAbs, LocalShift)):
        mode, eps = filter_code(strategy)
        blocks, counts = system.hessian_blocks(x_free, mode, eps)
        h = system.assemble(blocks)
        return newton_direction(h, g), int((counts > 0).sum())

    blocks, counts = system.hessian_blocks(x_free, FILTER_NONE, 0.0)
    indefinite = int((counts > 0).sum())
    h = system.assemble(blocks)

    if isinstance(strategy, NoProjection):
        return _indefinite_direction(h, g), indefinite

    if isinstance(strategy, GlobalShift):
        solve = _try_spd_factor(h)
        if solve is None:
            eye = _identity_like(h)
            scale = _diag_scale(h)
            beta = strategy.beta0
            for _ in range(64):
                solve = _try_spd_factor(h + (beta * scale) * eye)
                if solve is not None:
                    break
                beta *= strategy.growth
            else:
                raise FactorizationError("global shift never reached PD")
        return solve(-g), indefinite

    if isinstance(strategy, OnDemand):
        solve = _try_spd_factor(h)
        if solve is not None:
            return solve(-g), indefinite
        mode, eps = filter_code(strategy.fallback)
        if mode == FILTER_NONE:
            raise ValueError("OnDemand fallback must be a projecting strategy")
        projected, _ = project_blocks(blocks, mode, eps)
        return newton_direction(system.assemble(projected), g), indefinite

    if isinstance(strategy, GlobalAbs):
        dense = h.toarray()
        w, q = np.linalg.eigh(0.5 * (dense + dense.T))
        h_abs = (q * np.abs(w)) @ q.T
        return newton_direction(0.5 * (h_abs + h_abs.T), g), indefinite

    raise ValueError(f"unknown strategy: {strategy!r}")


def total_energy(scenario: Scenario, positions: np.ndarray) -> float:
    """Sum of per-element rest_volume * Psi at the given full positions."""
    mesh, mat = scenario.mesh, scenario.material
    return kernels.total_energy(
        np.asarray(positions, dtype=np.float64),
        mesh.tets,
        mesh.rest_shape_inv,
        mesh.rest_volume,
        mat.mu,
        mat.lam,
        mat.model_code,
    )


def total_gradient(scenario: Scenario, positions: np.ndarray) -> np.ndarray:
    """Energy gradient restricted to the free (non-handle) DOFs."""
    mesh, mat = scenario.mesh, scenario.material
    _, grad = kernels.energy_gradient(
        np.asarray(positions, dtype=np.float64),
        mesh.tets,
        mesh.rest_shape_inv,
        mesh.rest_volume,
        mat.mu,
        mat.lam,
        mat.model_code,
    )
    return grad[scenario.free_vertices].ravel()


def assemble_projected_hessian(
    scenario: Scenario, positions: np.ndarray, strategy
) -> tuple[sp.csr_matrix, int]:
    """Scatter-add of filtered element blocks with handle rows/cols removed.

    Also returns how many elements had an indefinite (pre-filter) Hessian.
    """
    system = _System(scenario)
    x_free = np.asarray(positions, dtype=np.float64)[system.free].ravel()
    mode, eps = filter_code(strategy)
    blocks, counts = system.hessian_blocks(x_free, mode, eps)
    return system.assemble(blocks), int((counts > 0).sum())


def run_quasistatic(scenario: Scenario) -> SolveReport:
    """Minimize the scenario's elastic energy from its warped start.

    Deterministic given a scenario and strategy.  Failures surface in the
    report's status, never as exceptions; an infinite-energy start (inverted
    elements under a log/inverse model) reports LineSearchFailure since no
    finite descent step exists.
    """
    settings = scenario.settings
    strategy = settings.strategy
    system = _System(scenario)
    if (
        isinstance(strategy, GlobalAbs)
        and system.n_free_dofs > settings.global_abs_dof_cap
    ):
        raise ValueError(
            f"GlobalAbs needs a dense eigendecomposition; {system.n_free_dofs} "
            f"free DOFs exceed the cap of {settings.global_abs_dof_cap}"
        )
    tol = settings.tol_scale * scenario.material.lam
    x = system.initial_free()
    records: list[IterationRecord] = []

    energy = system.energy(x)
    if not np.isfinite(energy):
        return SolveReport(records, SolveStatus.LINE_SEARCH_FAILURE, system.positions(x))

    status = SolveStatus.MAX_ITERS
    for iteration in range(1, settings.max_iters + 1):
        t0 = time.perf_counter()
        _, g = system.energy_gradient(x)
        try:
            d, indefinite = _direction_for_strategy(system, x, g, strategy)
        except FactorizationError:
            status = SolveStatus.FACTORIZATION_FAILURE
            break
        decrement = -0.5 * float(np.dot(d, g))
        if 0.0 <= decrement < tol:
            status = SolveStatus.CONVERGED
            break
        try:
            alpha, energy = backtracking_line_search(
                system.energy, x, d, g, settings, f0=energy
            )
        except LineSearchError:
            status = SolveStatus.LINE_SEARCH_FAILURE
            break
        x = x + alpha * d
        records.append(
            IterationRecord(
                iteration=iteration,
                energy=energy,
                decrement=decrement,
                step_size=alpha,
                negative_elements=indefinite,
                wall_ms=(time.perf_counter() - t0) * 1e3,
            )
        )
    return SolveReport(records, status, system.positions(x))


def run_global_strategy(scenario: Scenario) -> SolveReport:
    """Run a scenario whose settings carry a global-level strategy."""
    if not isinstance(
        scenario.settings.strategy, (GlobalShift, GlobalAbs, OnDemand)
    ):
        raise ValueError(
            f"expected a global strategy, got {scenario.settings.strategy!r}"
        )
    return run_quasistatic(scenario)
