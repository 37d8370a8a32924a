"""Shared helpers: finite-difference oracles and tolerance utilities.

The FD oracles are deliberately independent of the analytic code paths they
check: plain central differences on the energy (or its gradient), never on
the Hessian formulas themselves.
"""

import numpy as np
import pytest

from tetnewton.materials import MaterialParams


def rel_diff(a, b) -> float:
    """Symmetric relative difference |a - b| / max(|a|, |b|), elementwise max."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.abs(a), np.abs(b))
    denom = np.where(denom == 0.0, 1.0, denom)
    return float(np.max(np.abs(a - b) / denom))


def fd_gradient(f, x, h):
    """Central-difference gradient of a scalar function of a flat vector."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    for i in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2.0 * h)
    return g


def fd_jacobian(g, x, h):
    """Central-difference Jacobian of a vector function of a flat vector."""
    x = np.asarray(x, dtype=np.float64)
    cols = []
    for i in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        cols.append((np.asarray(g(xp)) - np.asarray(g(xm))) / (2.0 * h))
    return np.stack(cols, axis=-1)


def random_rotation(rng) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_f(rng, model_code: int, spread: float = 0.4) -> np.ndarray:
    """A non-degenerate deformation gradient; J > 0 for log/inverse models."""
    while True:
        f = np.eye(3) + spread * rng.standard_normal((3, 3))
        j = np.linalg.det(f)
        if model_code in (1, 3) and j < 0.2:
            continue
        if abs(j) > 0.05:
            return f


@pytest.fixture
def rng():
    return np.random.default_rng(20240814)


@pytest.fixture
def soft_material():
    return MaterialParams(mu=1.3, lam=7.7)
