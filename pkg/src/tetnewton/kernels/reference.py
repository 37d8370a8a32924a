"""NumPy reference implementation of the batched element kernels.

Everything here is vectorized over elements.  Given vertex positions, tet
connectivity, the per-tet rest-shape inverses and volumes, these kernels
produce the total strain energy, its gradient, and the (optionally
spectrally filtered) per-element 12x12 Hessian blocks.

Deformation-gradient Hessians are 9x9 over vec(F) in row-major order.  The
stable Neo-Hookean and log-barrier Neo-Hookean models use direct F-space
formulas; the ARAP and symmetric Dirichlet models go through the
rotation-variant (signed) SVD, where the scaling/twist/flip structure of
isotropic energies gives closed-form spectra without singular divisions.
"""

from __future__ import annotations

import numpy as np

from ..projection import project_blocks

MODEL_SNH = 0
MODEL_NH_LOG = 1
MODEL_ARAP_VOL = 2
MODEL_SD_VOL = 3

_MODELS = (MODEL_SNH, MODEL_NH_LOG, MODEL_ARAP_VOL, MODEL_SD_VOL)

# Levi-Civita tensor, used for det(F) derivatives.
_EPS3 = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    _EPS3[_i, _j, _k] = 1.0
    _EPS3[_i, _k, _j] = -1.0

_EYE9 = np.eye(9)

# Unordered singular-value pairs and the index of the leftover axis.
_PAIRS = ((0, 1), (0, 2), (1, 2))
_THIRD = (2, 1, 0)


def _check_model(model: int) -> None:
    if model not in _MODELS:
        raise ValueError(f"unknown material model code: {model}")


def deformation_gradients(x, tets, bm) -> np.ndarray:
    """F = Ds * Bm for every element; x is (n, 3), result (m, 3, 3)."""
    corners = x[tets]
    ds = np.transpose(corners[:, 1:, :] - corners[:, :1, :], (0, 2, 1))
    return ds @ bm


def _vertex_weights(bm: np.ndarray) -> np.ndarray:
    """dF/dx structure: (m, 4, 3) with row k the weight of vertex k."""
    m = bm.shape[0]
    w = np.empty((m, 4, 3))
    w[:, 1:, :] = bm
    w[:, 0, :] = -bm.sum(axis=1)
    return w


def _cofactor(f: np.ndarray) -> np.ndarray:
    """Cofactor matrix dJ/dF, valid for singular and inverted F."""
    cof = np.empty_like(f)
    cof[:, :, 0] = np.cross(f[:, :, 1], f[:, :, 2])
    cof[:, :, 1] = np.cross(f[:, :, 2], f[:, :, 0])
    cof[:, :, 2] = np.cross(f[:, :, 0], f[:, :, 1])
    return cof


def _det_hessian(f: np.ndarray) -> np.ndarray:
    """d2J/dF2 as (m, 9, 9): H[(i,j),(k,l)] = eps_ikm eps_jln F_mn."""
    m = f.shape[0]
    h = np.einsum("ikm,jln,emn->eijkl", _EPS3, _EPS3, f, optimize=True)
    return h.reshape(m, 9, 9)


def _signed_svd(f: np.ndarray):
    """SVD with det(U) = det(V) = +1; sigma_z carries the inversion sign."""
    u, s, vt = np.linalg.svd(f)
    du = np.linalg.det(u)
    dv = np.linalg.det(vt)
    u = u.copy()
    vt = vt.copy()
    s = s.copy()
    u[:, :, 2] *= du[:, None]
    vt[:, 2, :] *= dv[:, None]
    s[:, 2] *= du * dv
    return u, s, vt


def signed_singular_values(f: np.ndarray) -> np.ndarray:
    """Singular values sigma_x >= sigma_y >= sigma_z of the signed SVD."""
    s = np.linalg.svd(f, compute_uv=False)
    s[:, 2] *= np.sign(np.linalg.det(f)) + (np.linalg.det(f) == 0.0)
    return s


def _sigma_products(s: np.ndarray) -> np.ndarray:
    """p_i = dJ/dsigma_i, the product of the other two singular values."""
    p = np.empty_like(s)
    p[:, 0] = s[:, 1] * s[:, 2]
    p[:, 1] = s[:, 0] * s[:, 2]
    p[:, 2] = s[:, 0] * s[:, 1]
    return p


def _sigma_system(model: int, s: np.ndarray, mu: float, lam: float):
    """Gradient, scaling block and twist/flip eigenvalues in sigma space.

    Returns (g, a, twist, flip) with g (m, 3), a (m, 3, 3) the d2Psi/dsigma2
    block, and twist/flip (m, 3) ordered by ``_PAIRS``.  The pair formulas
    (g_i +- g_j)/(sigma_i +- sigma_j) are evaluated in factored form, so the
    only singular denominator left is the ARAP twist at sigma_i + sigma_j = 0
    (the polar rotation's own singularity), which is floored.
    """
    m = s.shape[0]
    p = _sigma_products(s)
    j = s[:, 0] * s[:, 1] * s[:, 2]
    jm1 = j - 1.0
    a = np.empty((m, 3, 3))
    twist = np.empty((m, 3))
    flip = np.empty((m, 3))

    if model == MODEL_ARAP_VOL:
        g = mu * (s - 1.0) + lam * jm1[:, None] * p
        for i in range(3):
            a[:, i, i] = mu + lam * p[:, i] ** 2
        for idx, (i, jj) in enumerate(_PAIRS):
            k = _THIRD[idx]
            a[:, i, jj] = a[:, jj, i] = lam * (p[:, i] * p[:, jj] + jm1 * s[:, k])
            den = s[:, i] + s[:, jj]
            floor = 1e-8 * np.maximum(1.0, s[:, 0])
            den = np.where(den >= 0, np.maximum(den, floor), np.minimum(den, -floor))
            twist[:, idx] = mu - 2.0 * mu / den + lam * jm1 * s[:, k]
            flip[:, idx] = mu - lam * jm1 * s[:, k]
        return g, a, twist, flip

    if model == MODEL_SD_VOL:
        inv3 = s**-3
        g = 0.5 * mu * (s - inv3) + lam * jm1[:, None] * p
        for i in range(3):
            a[:, i, i] = 0.5 * mu * (1.0 + 3.0 * s[:, i] ** -4) + lam * p[:, i] ** 2
        for idx, (i, jj) in enumerate(_PAIRS):
            k = _THIRD[idx]
            a[:, i, jj] = a[:, jj, i] = lam * (p[:, i] * p[:, jj] + jm1 * s[:, k])
            si, sj = s[:, i], s[:, jj]
            cube = si**3 * sj**3
            twist[:, idx] = (
                0.5 * mu * (1.0 - (si**2 - si * sj + sj**2) / cube)
                + lam * jm1 * s[:, k]
            )
            flip[:, idx] = (
                0.5 * mu * (1.0 + (si**2 + si * sj + sj**2) / cube)
                - lam * jm1 * s[:, k]
            )
        return g, a, twist, flip

    raise ValueError(f"sigma-space system not defined for model {model}")


def _sigma_hess9(u: np.ndarray, vt: np.ndarray, a, twist, flip) -> np.ndarray:
    """Assemble the 9x9 Hessian from its scaling/twist/flip eigensystem."""
    m = u.shape[0]
    q = np.empty((m, 9, 9))
    for i in range(3):
        q[:, i, :] = np.einsum("ea,eb->eab", u[:, :, i], vt[:, i, :]).reshape(m, 9)
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for idx, (i, jj) in enumerate(_PAIRS):
        ui_vj = np.einsum("ea,eb->eab", u[:, :, i], vt[:, jj, :]).reshape(m, 9)
        uj_vi = np.einsum("ea,eb->eab", u[:, :, jj], vt[:, i, :]).reshape(m, 9)
        q[:, 3 + idx, :] = inv_sqrt2 * (ui_vj - uj_vi)
        q[:, 6 + idx, :] = inv_sqrt2 * (ui_vj + uj_vi)
    mm = np.zeros((m, 9, 9))
    mm[:, :3, :3] = a
    for idx in range(3):
        mm[:, 3 + idx, 3 + idx] = twist[:, idx]
        mm[:, 6 + idx, 6 + idx] = flip[:, idx]
    return np.einsum("eri,ers,esj->eij", q, mm, q, optimize=True)


# ---------------------------------------------------------------------------
# Energy densities, PK1-style derivatives and F-space Hessians
# ---------------------------------------------------------------------------


def psi_batch(f: np.ndarray, mu: float, lam: float, model: int) -> np.ndarray:
    """Strain energy density per element; +inf marks inverted elements for
    models whose energy is undefined there (never an exception)."""
    _check_model(model)
    ic = np.einsum("eij,eij->e", f, f)
    j = np.linalg.det(f)
    if model == MODEL_SNH:
        t = (j - 1.0) - mu / lam
        return 0.5 * mu * (ic - 3.0) + 0.5 * lam * t * t
    if model == MODEL_NH_LOG:
        ok = j > 0.0
        log_j = np.log(np.where(ok, j, 1.0))
        val = 0.5 * mu * (ic - 3.0) - mu * log_j + 0.5 * lam * (j - 1.0) ** 2
        return np.where(ok, val, np.inf)
    if model == MODEL_ARAP_VOL:
        s = signed_singular_values(f)
        return 0.5 * mu * ((s - 1.0) ** 2).sum(axis=1) + 0.5 * lam * (j - 1.0) ** 2
    # symmetric Dirichlet + volume
    ok = j > 0.0
    cof = _cofactor(f)
    inv_norm2 = np.einsum("eij,eij->e", cof, cof) / np.where(ok, j, 1.0) ** 2
    val = 0.25 * mu * (ic + inv_norm2 - 6.0) + 0.5 * lam * (j - 1.0) ** 2
    return np.where(ok, val, np.inf)


def _require_uninverted(j: np.ndarray, model: int, what: str) -> None:
    if model in (MODEL_NH_LOG, MODEL_SD_VOL) and (j <= 0.0).any():
        raise ValueError(
            f"{what} undefined: {int((j <= 0).sum())} element(s) have J <= 0 "
            "(infinite-energy state for this model)"
        )


def pk1_batch(f: np.ndarray, mu: float, lam: float, model: int) -> np.ndarray:
    """dPsi/dF per element, shape (m, 3, 3)."""
    _check_model(model)
    j = np.linalg.det(f)
    _require_uninverted(j, model, "energy gradient")
    cof = _cofactor(f)
    if model == MODEL_SNH:
        kvol = lam * (j - 1.0) - mu
        return mu * f + kvol[:, None, None] * cof
    if model == MODEL_NH_LOG:
        kvol = lam * (j - 1.0) - mu / j
        return mu * f + kvol[:, None, None] * cof
    if model == MODEL_ARAP_VOL:
        u, _, vt = _signed_svd(f)
        r = u @ vt
        return mu * (f - r) + (lam * (j - 1.0))[:, None, None] * cof
    t = np.linalg.inv(f)
    tt = np.transpose(t, (0, 2, 1))
    return 0.5 * mu * (f - tt @ t @ tt) + (lam * (j - 1.0))[:, None, None] * cof


def hess9_batch(f: np.ndarray, mu: float, lam: float, model: int) -> np.ndarray:
    """d2Psi/dF2 per element over vec(F), shape (m, 9, 9), symmetric."""
    _check_model(model)
    m = f.shape[0]
    j = np.linalg.det(f)
    _require_uninverted(j, model, "energy Hessian")
    if model in (MODEL_SNH, MODEL_NH_LOG):
        vcof = _cofactor(f).reshape(m, 9)
        if model == MODEL_SNH:
            c_outer = np.full(m, lam)
            c_hj = lam * (j - 1.0) - mu
        else:
            c_outer = lam + mu / j**2
            c_hj = lam * (j - 1.0) - mu / j
        h = mu * _EYE9 + c_hj[:, None, None] * _det_hessian(f)
        h += c_outer[:, None, None] * np.einsum("ei,ej->eij", vcof, vcof)
        return h
    u, s, vt = _signed_svd(f)
    _, a, twist, flip = _sigma_system(model, s, mu, lam)
    h = _sigma_hess9(u, vt, a, twist, flip)
    return 0.5 * (h + np.transpose(h, (0, 2, 1)))


# ---------------------------------------------------------------------------
# Position-space kernels (the solver's hot path)
# ---------------------------------------------------------------------------


def total_energy(x, tets, bm, vol, mu, lam, model) -> float:
    """Sum of rest_volume * Psi over all elements; +inf propagates."""
    f = deformation_gradients(x, tets, bm)
    return float(np.dot(vol, psi_batch(f, mu, lam, model)))


def energy_gradient(x, tets, bm, vol, mu, lam, model):
    """Total energy and its (n, 3) gradient over all vertices."""
    f = deformation_gradients(x, tets, bm)
    energy = float(np.dot(vol, psi_batch(f, mu, lam, model)))
    p = pk1_batch(f, mu, lam, model)
    w = _vertex_weights(bm)
    per_corner = np.einsum("eab,ekb->eka", p, w) * vol[:, None, None]
    grad = np.zeros_like(x)
    np.add.at(grad, tets, per_corner)
    return energy, grad


def element_hessians(x, tets, bm, vol, mu, lam, model, mode, eps):
    """Per-element 12x12 Hessian blocks after the spectral filter ``mode``.

    Returns (blocks, counts) where counts[i] is the number of negative
    eigenvalues of block i before filtering.  DOF order per element is
    (v0x, v0y, v0z, v1x, ..., v3z).
    """
    m = tets.shape[0]
    f = deformation_gradients(x, tets, bm)
    h9 = hess9_batch(f, mu, lam, model).reshape(m, 3, 3, 3, 3)
    w = _vertex_weights(bm)
    h12 = np.einsum("ekb,edbfc,elc->ekdlf", w, h9, w, optimize=True)
    h12 = h12.reshape(m, 12, 12) * vol[:, None, None]
    h12 = 0.5 * (h12 + np.transpose(h12, (0, 2, 1)))
    return project_blocks(h12, mode, eps)
