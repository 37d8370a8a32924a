"""Projected-Newton quasistatics for volume-preserving hyperelastic tet meshes.

The per-element Hessian blocks can be pushed onto the PSD cone with
interchangeable spectral filters (clamp, absolute value, diagonal shift) or
handled at the assembled level (global shift, global abs, projection on
demand), so the filters can be benchmarked against each other on
reproducible scenarios.
"""

from . import kernels
from .elements import (
    FInvariants,
    d2psi_dF2,
    deformation_gradient,
    dpsi_dF,
    element_gradient,
    element_hessian,
    f_invariants,
    psi,
    snh_twist_flip_eigenvalues,
)
from .materials import MaterialModel, MaterialParams, lame_from_young_poisson
from .mesh import (
    Bend,
    Compress,
    DeformationTransform,
    HalfSpaceSelect,
    MeshParseError,
    Shear,
    Stretch,
    TetMesh,
    Translate,
    Twist,
    apply_initial_deformation,
    apply_transform,
    generate_beam,
    load_tetgen,
    save_tetgen,
    select_vertices,
)
from .projection import (
    EigAbs,
    EigClamp,
    GlobalAbs,
    GlobalShift,
    LocalShift,
    NoProjection,
    OnDemand,
    ProjectionReport,
    count_negative_eigenvalues,
    project_symmetric,
)
from .scenario import Scenario, SolveSettings, build_scenario
from .solver import (
    IterationRecord,
    SolveReport,
    SolveStatus,
    assemble_projected_hessian,
    backtracking_line_search,
    newton_direction,
    run_global_strategy,
    run_quasistatic,
    total_energy,
    total_gradient,
)
from .toy2d import ToyState, run_toy_newton, toy_f, toy_grad, toy_hess

__version__ = "0.1.0"

__all__ = [
    "Bend",
    "Compress",
    "DeformationTransform",
    "EigAbs",
    "EigClamp",
    "FInvariants",
    "GlobalAbs",
    "GlobalShift",
    "HalfSpaceSelect",
    "IterationRecord",
    "LocalShift",
    "MaterialModel",
    "MaterialParams",
    "MeshParseError",
    "NoProjection",
    "OnDemand",
    "ProjectionReport",
    "Scenario",
    "Shear",
    "SolveReport",
    "SolveSettings",
    "SolveStatus",
    "Stretch",
    "TetMesh",
    "Translate",
    "Twist",
    "ToyState",
    "apply_initial_deformation",
    "apply_transform",
    "assemble_projected_hessian",
    "backtracking_line_search",
    "build_scenario",
    "count_negative_eigenvalues",
    "d2psi_dF2",
    "deformation_gradient",
    "dpsi_dF",
    "element_gradient",
    "element_hessian",
    "f_invariants",
    "generate_beam",
    "kernels",
    "lame_from_young_poisson",
    "load_tetgen",
    "newton_direction",
    "project_symmetric",
    "psi",
    "run_global_strategy",
    "run_quasistatic",
    "run_toy_newton",
    "save_tetgen",
    "select_vertices",
    "snh_twist_flip_eigenvalues",
    "toy_f",
    "toy_grad",
    "toy_hess",
    "total_energy",
    "total_gradient",
]
