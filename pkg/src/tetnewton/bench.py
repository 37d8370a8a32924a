"""Micro-benchmark comparing the compiled and NumPy element kernels."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .materials import MaterialParams, lame_from_young_poisson
from .mesh import generate_beam


@dataclass(frozen=True)
class KernelTiming:
    kernel: str
    backend: str
    ms_per_call: float


def available_backends() -> list[str]:
    names = ["python"]
    try:
        kernels.get_module("compiled")
        names.insert(0, "compiled")
    except ImportError:
        pass
    return names


def benchmark_kernels(
    cells: int = 6, repeats: int = 5, stretch: float = 1.5
) -> list[KernelTiming]:
    """Time the three hot kernels on a beam of ``cells``^2 x 3*cells cells.

    The deformed state is a uniform stretch, far enough from rest that the
    Hessian pass hits the indefinite branches.  Returns one row per
    (kernel, backend) pair; call order warms each backend up first.
    """
    mesh = generate_beam(cells, cells, 3 * cells, (1.0, 1.0, 3.0))
    mu, lam = lame_from_young_poisson(1e8, 0.495)
    mat = MaterialParams(mu, lam)
    x = mesh.rest_positions * stretch
    args = (x, mesh.tets, mesh.rest_shape_inv, mesh.rest_volume, mu, lam, mat.model_code)

    rows: list[KernelTiming] = []
    for backend in available_backends():
        impl = kernels.get_module(backend)
        calls = {
            "energy": lambda: impl.total_energy(*args),
            "energy_gradient": lambda: impl.energy_gradient(*args),
            "hessians_abs": lambda: impl.element_hessians(*args, 2, 0.0),
        }
        for name, call in calls.items():
            call()  # warm up (JIT caches, page faults)
            t0 = time.perf_counter()
            for _ in range(repeats):
                call()
            elapsed = (time.perf_counter() - t0) / repeats
            rows.append(KernelTiming(name, backend, elapsed * 1e3))
    return rows


def format_table(rows: list[KernelTiming], num_tets: int) -> str:
    by_kernel: dict[str, dict[str, float]] = {}
    for r in rows:
        by_kernel.setdefault(r.kernel, {})[r.backend] = r.ms_per_call
    lines = [f"kernel timings ({num_tets} tets, ms per call):"]
    header = f"{'kernel':<18}" + "".join(f"{b:>12}" for b in available_backends())
    if len(available_backends()) > 1:
        header += f"{'speedup':>10}"
    lines.append(header)
    for kernel, per_backend in by_kernel.items():
        line = f"{kernel:<18}"
        for b in available_backends():
            line += f"{per_backend.get(b, float('nan')):>12.2f}"
        if "compiled" in per_backend and "python" in per_backend:
            line += f"{per_backend['python'] / per_backend['compiled']:>9.1f}x"
        lines.append(line)
    return "\n".join(lines)
