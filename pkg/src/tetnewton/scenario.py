"""Benchmark scenarios: mesh + handles + warped start + material + settings."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .materials import MaterialParams
from .mesh import (
    DeformationTransform,
    HalfSpaceSelect,
    TetMesh,
    apply_initial_deformation,
    apply_transform,
    select_vertices,
)
from .projection import EigAbs, Strategy


@dataclass(frozen=True)
class SolveSettings:
    """Newton-loop knobs.

    The solve stops when the decrement -0.5 d.g drops below
    ``tol_scale * lam`` (the Lame volume stiffness sets the gradient scale),
    or after ``max_iters`` accepted steps.
    """

    max_iters: int = 200
    tol_scale: float = 1e-5
    ls_c: float = 1e-4
    ls_shrink: float = 0.5
    ls_max_backtracks: int = 64
    strategy: Strategy = field(default_factory=EigAbs)
    global_abs_dof_cap: int = 3000

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not 0.0 < self.ls_shrink < 1.0:
            raise ValueError(f"ls_shrink must lie in (0, 1), got {self.ls_shrink}")
        if not 0.0 < self.ls_c < 1.0:
            raise ValueError(f"ls_c must lie in (0, 1), got {self.ls_c}")
        if not self.tol_scale > 0.0:
            raise ValueError(f"tol_scale must be > 0, got {self.tol_scale}")
        if self.ls_max_backtracks < 1:
            raise ValueError("ls_max_backtracks must be >= 1")


@dataclass(frozen=True)
class Scenario:
    """One quasistatic solve: who is pinned where, and from what start."""

    mesh: TetMesh
    handles: np.ndarray
    handle_targets: np.ndarray
    initial_positions: np.ndarray
    material: MaterialParams
    settings: SolveSettings = field(default_factory=SolveSettings)

    def __post_init__(self):
        handles = np.asarray(self.handles, dtype=np.int64).ravel()
        handles = np.unique(handles)
        if handles.size == 0:
            raise ValueError("a scenario needs at least one handle vertex")
        if handles.min() < 0 or handles.max() >= self.mesh.num_vertices:
            raise ValueError("handle index out of range")
        targets = np.asarray(self.handle_targets, dtype=np.float64)
        if targets.shape != (handles.size, 3):
            raise ValueError(
                f"handle_targets must be ({handles.size}, 3), got {targets.shape}"
            )
        initial = np.array(self.initial_positions, dtype=np.float64)
        if initial.shape != self.mesh.rest_positions.shape:
            raise ValueError("initial_positions shape mismatch")
        if not (np.isfinite(targets).all() and np.isfinite(initial).all()):
            raise ValueError("non-finite positions in scenario")
        scale = max(1.0, float(np.abs(initial).max()))
        if np.abs(initial[handles] - targets).max(initial=0.0) > 1e-9 * scale:
            raise ValueError("initial_positions disagree with handle_targets")
        initial[handles] = targets  # pin exactly
        object.__setattr__(self, "handles", handles)
        object.__setattr__(self, "handle_targets", targets)
        object.__setattr__(self, "initial_positions", initial)

    @property
    def free_vertices(self) -> np.ndarray:
        return np.setdiff1d(
            np.arange(self.mesh.num_vertices, dtype=np.int64), self.handles
        )

    @property
    def num_free_dofs(self) -> int:
        return 3 * (self.mesh.num_vertices - self.handles.size)


def resolve_handles(
    mesh: TetMesh,
    selection: Union[Iterable[int], HalfSpaceSelect, Sequence[HalfSpaceSelect]],
) -> np.ndarray:
    """Union of explicit indices and/or half-space predicates."""
    if isinstance(selection, HalfSpaceSelect):
        return select_vertices(mesh, selection)
    selection = list(selection)
    if selection and isinstance(selection[0], HalfSpaceSelect):
        parts = [select_vertices(mesh, pred) for pred in selection]
        return np.unique(np.concatenate(parts)) if parts else np.empty(0, np.int64)
    return np.unique(np.asarray(selection, dtype=np.int64))


def build_scenario(
    mesh: TetMesh,
    transform: DeformationTransform,
    handles,
    material: MaterialParams,
    settings: Optional[SolveSettings] = None,
    *,
    warp_free_vertices: bool = True,
) -> Scenario:
    """Assemble a scenario from a mesh, an initial deformation and handles.

    With ``warp_free_vertices`` (the default) the transform moves every
    vertex, so the start carries the full volume change; otherwise only the
    handles leave their rest positions.
    """
    handle_idx = resolve_handles(mesh, handles)
    if warp_free_vertices:
        initial, targets = apply_initial_deformation(mesh, transform, handle_idx)
    else:
        warped = apply_transform(mesh.rest_positions, transform)
        targets = warped[handle_idx].copy()
        initial = mesh.rest_positions.copy()
        initial[handle_idx] = targets
    return Scenario(
        mesh=mesh,
        handles=handle_idx,
        handle_targets=targets,
        initial_positions=initial,
        material=material,
        settings=settings if settings is not None else SolveSettings(),
    )
