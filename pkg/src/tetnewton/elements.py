"""Single-element kinematics, energy densities and their derivatives.

Thin, clarity-first wrappers over the batched reference kernels, plus the
closed-form twist/flip eigenvalues of the stable Neo-Hookean F-space
Hessian.  These are the functions tests and oracles talk to; the solver
uses the batched kernels directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import reference as _ref
from .materials import MaterialParams
from .mesh import TetMesh


@dataclass(frozen=True)
class FInvariants:
    """Deformation gradient with its isotropic invariants.

    ``sigma`` holds the signed-SVD singular values sigma_x >= sigma_y >=
    sigma_z (det U = det V = +1), so sigma_z < 0 flags an inverted element.
    """

    F: np.ndarray
    sigma: np.ndarray
    I_C: float
    J: float


def deformation_gradient(deformed_edges: np.ndarray, rest_shape_inv: np.ndarray):
    """F = Ds * inv(Dm) for one element."""
    return np.asarray(deformed_edges, dtype=np.float64) @ rest_shape_inv


def f_invariants(f: np.ndarray) -> FInvariants:
    f = np.asarray(f, dtype=np.float64)
    sigma = _ref.signed_singular_values(f[None])[0]
    return FInvariants(
        F=f,
        sigma=sigma,
        I_C=float(np.einsum("ij,ij->", f, f)),
        J=float(np.linalg.det(f)),
    )


def psi(f: np.ndarray, material: MaterialParams) -> float:
    """Energy density at F; +inf (not an exception) on inverted elements for
    models with a log or inverse term."""
    f = np.asarray(f, dtype=np.float64)
    return float(
        _ref.psi_batch(f[None], material.mu, material.lam, material.model_code)[0]
    )


def dpsi_dF(f: np.ndarray, material: MaterialParams) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    return _ref.pk1_batch(f[None], material.mu, material.lam, material.model_code)[0]


def d2psi_dF2(f: np.ndarray, material: MaterialParams) -> np.ndarray:
    """9x9 symmetric Hessian over row-major vec(F)."""
    f = np.asarray(f, dtype=np.float64)
    return _ref.hess9_batch(f[None], material.mu, material.lam, material.model_code)[0]


def snh_twist_flip_eigenvalues(sigma, mu: float, lam: float) -> np.ndarray:
    """The six twist/flip eigenvalues of the stable Neo-Hookean Hessian.

    With k = lam*(J - 1) - mu and J the product of the (signed) singular
    values, the values are mu + sigma_i*k for each axis followed by
    mu - sigma_i*k, ordered (z, x, y) within each triple.  Valid for
    inverted states.
    """
    sx, sy, sz = np.asarray(sigma, dtype=np.float64)
    k = lam * (sx * sy * sz - 1.0) - mu
    return np.array(
        [mu + sz * k, mu + sx * k, mu + sy * k, mu - sz * k, mu - sx * k, mu - sy * k]
    )


def _element_arrays(mesh: TetMesh, index: int, positions: np.ndarray):
    tets = mesh.tets[index : index + 1]
    bm = mesh.rest_shape_inv[index : index + 1]
    vol = mesh.rest_volume[index : index + 1]
    return np.asarray(positions, dtype=np.float64), tets, bm, vol


def element_gradient(
    mesh: TetMesh, index: int, positions: np.ndarray, material: MaterialParams
) -> np.ndarray:
    """Gradient of rest_volume * Psi w.r.t. the element's 12 coordinates,
    ordered (v0x, v0y, v0z, v1x, ..., v3z)."""
    x, tets, bm, vol = _element_arrays(mesh, index, positions)
    _, grad = _ref.energy_gradient(
        x, tets, bm, vol, material.mu, material.lam, material.model_code
    )
    return grad[mesh.tets[index]].ravel()


def element_hessian(
    mesh: TetMesh, index: int, positions: np.ndarray, material: MaterialParams
) -> np.ndarray:
    """Unfiltered 12x12 Hessian of the element energy."""
    x, tets, bm, vol = _element_arrays(mesh, index, positions)
    blocks, _ = _ref.element_hessians(
        x, tets, bm, vol, material.mu, material.lam, material.model_code, 0, 0.0
    )
    return blocks[0]
