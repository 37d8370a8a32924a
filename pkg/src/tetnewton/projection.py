"""Eigenvalue filters that push symmetric Hessian blocks onto the PSD cone.

The interesting choice is what to do with a negative eigenvalue: clamp it to
a floor (the classical approach), replace it by its absolute value, or shift
the whole spectrum.  All filters keep the eigenvectors of the input, so they
differ only in how strongly the curvature along each negative mode pushes
back on the Newton step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

# Relative floor below which an eigenvalue counts as zero rather than negative.
NEGATIVE_EIG_REL_TOL = 1e-12


@dataclass(frozen=True)
class EigClamp:
    """Replace eigenvalues below ``eps`` with ``eps`` (eps >= 0)."""

    eps: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.eps) and self.eps >= 0.0):
            raise ValueError(f"clamp eps must be finite and >= 0, got {self.eps}")


@dataclass(frozen=True)
class EigAbs:
    """Replace every eigenvalue with its absolute value (parameter-free)."""


@dataclass(frozen=True)
class LocalShift:
    """Add tau*I with tau = max(0, -lambda_min) to each block."""


@dataclass(frozen=True)
class NoProjection:
    """Use the raw Hessian (vanilla Newton; no PSD guarantee)."""


ProjectionStrategy = Union[EigClamp, EigAbs, LocalShift, NoProjection]


@dataclass(frozen=True)
class GlobalShift:
    """Factorize H + beta*I on the assembled system, escalating beta until PD."""

    beta0: float = 1e-6
    growth: float = 10.0

    def __post_init__(self):
        if not self.beta0 > 0.0:
            raise ValueError(f"beta0 must be > 0, got {self.beta0}")
        if not self.growth > 1.0:
            raise ValueError(f"growth must be > 1, got {self.growth}")


@dataclass(frozen=True)
class GlobalAbs:
    """Absolute-value filter on the dense eigendecomposition of the assembled H."""


@dataclass(frozen=True)
class OnDemand:
    """Try the exact Hessian first; fall back to per-element projection."""

    fallback: ProjectionStrategy = field(default_factory=EigAbs)


GlobalStrategy = Union[GlobalShift, GlobalAbs, OnDemand]
Strategy = Union[ProjectionStrategy, GlobalStrategy]

# Integer codes for the batched element kernels (local filters only).
FILTER_NONE, FILTER_CLAMP, FILTER_ABS, FILTER_SHIFT = 0, 1, 2, 3


def filter_code(strategy: ProjectionStrategy) -> tuple[int, float]:
    """Map a local strategy onto the kernel's (mode, eps) pair."""
    if isinstance(strategy, EigClamp):
        return FILTER_CLAMP, strategy.eps
    if isinstance(strategy, EigAbs):
        return FILTER_ABS, 0.0
    if isinstance(strategy, LocalShift):
        return FILTER_SHIFT, 0.0
    if isinstance(strategy, NoProjection):
        return FILTER_NONE, 0.0
    raise ValueError(f"not a per-element projection strategy: {strategy!r}")


@dataclass(frozen=True)
class ProjectionReport:
    negative_count: int
    min_eig_before: float
    min_eig_after: float


def _checked_symmetric(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    if not np.isfinite(h).all():
        raise ValueError("matrix contains non-finite entries")
    scale = np.abs(h).max()
    if scale > 0.0 and np.abs(h - h.T).max() > 1e-8 * scale:
        raise ValueError("matrix is not symmetric within 1e-8 of its magnitude")
    return 0.5 * (h + h.T)


def project_symmetric(
    h: np.ndarray, strategy: ProjectionStrategy
) -> tuple[np.ndarray, ProjectionReport]:
    """Apply the spectral filter to one symmetric matrix.

    Returns the filtered matrix and a report with the pre-filter negative
    count and the extremal eigenvalues before/after.  Eigenvectors are kept;
    only the spectrum is transformed.
    """
    h = _checked_symmetric(h)
    w, q = np.linalg.eigh(h)
    scale = np.abs(w).max(initial=0.0)
    negative = int(np.count_nonzero(w < -NEGATIVE_EIG_REL_TOL * scale))

    if isinstance(strategy, NoProjection):
        return h, ProjectionReport(negative, float(w[0]), float(w[0]))
    if isinstance(strategy, LocalShift):
        tau = max(0.0, -float(w[0]))
        out = h + tau * np.eye(h.shape[0])
        return out, ProjectionReport(negative, float(w[0]), float(w[0]) + tau)
    if isinstance(strategy, EigClamp):
        w_new = np.maximum(w, strategy.eps)
    elif isinstance(strategy, EigAbs):
        w_new = np.abs(w)
    else:
        raise ValueError(f"unknown projection strategy: {strategy!r}")
    out = (q * w_new) @ q.T
    out = 0.5 * (out + out.T)
    return out, ProjectionReport(negative, float(w[0]), float(w_new.min()))


def count_negative_eigenvalues(h: np.ndarray) -> int:
    """Eigenvalues below -1e-12 times the spectral norm of ``h``."""
    h = _checked_symmetric(h)
    w = np.linalg.eigvalsh(h)
    scale = np.abs(w).max(initial=0.0)
    return int(np.count_nonzero(w < -NEGATIVE_EIG_REL_TOL * scale))


def project_blocks(
    blocks: np.ndarray, mode: int, eps: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """Batched spectral filter over a (m, k, k) stack of symmetric blocks.

    Returns the filtered stack and the per-block count of negative
    eigenvalues (before filtering).  ``mode`` uses the FILTER_* codes.
    """
    blocks = np.asarray(blocks, dtype=np.float64)
    sym = 0.5 * (blocks + np.transpose(blocks, (0, 2, 1)))
    if mode == FILTER_NONE:
        w = np.linalg.eigvalsh(sym)
        scale = np.abs(w).max(axis=1)
        counts = (w < -NEGATIVE_EIG_REL_TOL * scale[:, None]).sum(axis=1)
        return blocks, counts.astype(np.int64)

    w, q = np.linalg.eigh(sym)
    scale = np.abs(w).max(axis=1)
    counts = (w < -NEGATIVE_EIG_REL_TOL * scale[:, None]).sum(axis=1)
    if mode == FILTER_SHIFT:
        tau = np.maximum(0.0, -w[:, 0])
        out = sym + tau[:, None, None] * np.eye(sym.shape[1])
        return out, counts.astype(np.int64)
    if mode == FILTER_CLAMP:
        w_new = np.maximum(w, eps)
    elif mode == FILTER_ABS:
        w_new = np.abs(w)
    else:
        raise ValueError(f"unknown filter mode: {mode}")
    out = np.einsum("eik,ek,ejk->eij", q, w_new, q, optimize=True)
    return 0.5 * (out + np.transpose(out, (0, 2, 1))), counts.astype(np.int64)
