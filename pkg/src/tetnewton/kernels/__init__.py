"""Element-kernel backend selection.

The hot per-element loop (energy, gradient, filtered Hessian blocks) has two
implementations: a Cython extension (``_fastcore``) and a vectorized NumPy
fallback (``reference``).  The compiled one is preferred when importable;
set ``TETNEWTON_KERNELS=python`` or ``=compiled`` to force a choice, or call
:func:`use` to switch at runtime (e.g. for benchmarking).
"""

from __future__ import annotations

import os
from types import ModuleType

from . import reference

_ENV_VAR = "TETNEWTON_KERNELS"
_impl: ModuleType = reference
_active = "python"


def _try_compiled():
    from . import _fastcore  # noqa: PLC0415

    return _fastcore


def use(name: str) -> str:
    """Bind the kernel backend: 'compiled', 'python', or 'auto'."""
    global _impl, _active
    name = name.lower()
    if name in ("python", "reference"):
        _impl, _active = reference, "python"
    elif name == "compiled":
        _impl, _active = _try_compiled(), "compiled"
    elif name == "auto":
        try:
            _impl, _active = _try_compiled(), "compiled"
        except ImportError:
            _impl, _active = reference, "python"
    else:
        raise ValueError(f"unknown kernel backend {name!r}")
    return _active


def active() -> str:
    """Name of the backend currently bound ('compiled' or 'python')."""
    return _active


def get_module(name: str | None = None) -> ModuleType:
    """The backend module itself; by name, or the active one."""
    if name is None:
        return _impl
    if name in ("python", "reference"):
        return reference
    if name == "compiled":
        return _try_compiled()
    raise ValueError(f"unknown kernel backend {name!r}")


def total_energy(x, tets, bm, vol, mu, lam, model) -> float:
    return _impl.total_energy(x, tets, bm, vol, mu, lam, model)


def energy_gradient(x, tets, bm, vol, mu, lam, model):
    return _impl.energy_gradient(x, tets, bm, vol, mu, lam, model)


def element_hessians(x, tets, bm, vol, mu, lam, model, mode, eps):
    return _impl.element_hessians(x, tets, bm, vol, mu, lam, model, mode, eps)


use(os.environ.get(_ENV_VAR, "auto"))
