"""Tetrahedral meshes, benchmark geometry, TetGen I/O and handle selection."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

_AXES = {"x": 0, "y": 1, "z": 2, 0: 0, 1: 1, 2: 2}


class MeshParseError(ValueError):
    """Raised for malformed TetGen .node/.ele input; message names the line."""


def _axis_index(axis) -> int:
    try:
        return _AXES[axis]
    except (KeyError, TypeError):
        raise ValueError(f"axis must be one of 'x','y','z' or 0,1,2, got {axis!r}")


def edge_matrices(positions: np.ndarray, tets: np.ndarray) -> np.ndarray:
    """Per-tet 3x3 edge matrices with edge vectors (v1-v0, v2-v0, v3-v0) as columns."""
    corners = positions[tets]  # (m, 4, 3)
    return np.transpose(corners[:, 1:, :] - corners[:, :1, :], (0, 2, 1))


def signed_volumes(positions: np.ndarray, tets: np.ndarray) -> np.ndarray:
    """Signed tet volumes det(edge matrix) / 6."""
    return np.linalg.det(edge_matrices(positions, tets)) / 6.0


@dataclass(frozen=True)
class TetMesh:
    """Rest geometry plus connectivity with precomputed per-element data.

    ``rest_shape_inv[i]`` is the inverse of element i's rest edge matrix and
    ``rest_volume[i]`` its (positive) rest volume.  Instances are immutable;
    deformed states are carried as separate position arrays.
    """

    rest_positions: np.ndarray
    tets: np.ndarray
    rest_shape_inv: np.ndarray = field(repr=False)
    rest_volume: np.ndarray = field(repr=False)

    @classmethod
    def from_arrays(cls, positions, tets) -> "TetMesh":
        positions = np.ascontiguousarray(positions, dtype=np.float64)
        tets = np.ascontiguousarray(tets, dtype=np.int64)
        if positions.ndim != 2 or positions.shape[1] != 3:
            raise ValueError(f"positions must be (n, 3), got {positions.shape}")
        if tets.ndim != 2 or tets.shape[1] != 4:
            raise ValueError(f"tets must be (m, 4), got {tets.shape}")
        if not np.isfinite(positions).all():
            raise ValueError("positions contain non-finite entries")
        n = positions.shape[0]
        if tets.size and (tets.min() < 0 or tets.max() >= n):
            raise ValueError("tet vertex index out of range")
        for k in range(4):
            for l in range(k + 1, 4):
                if (tets[:, k] == tets[:, l]).any():
                    raise ValueError("tet with repeated vertex indices")
        dm = edge_matrices(positions, tets)
        vol = np.linalg.det(dm) / 6.0
        if (vol <= 0.0).any():
            bad = int(np.argmin(vol))
            raise ValueError(
                f"tet {bad} is not positively oriented (signed volume {vol[bad]:g})"
            )
        return cls(positions, tets, np.linalg.inv(dm), vol)

    @property
    def num_vertices(self) -> int:
        return self.rest_positions.shape[0]

    @property
    def num_tets(self) -> int:
        return self.tets.shape[0]

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.rest_positions.min(axis=0), self.rest_positions.max(axis=0)


def _kuhn_cell_tets():
    """The 6-tet split of a unit cell, all sharing the (0,0,0)-(1,1,1) diagonal.

    Corners are bit-coded offsets; each permutation of the axes walks one
    monotone lattice path, and vertex order is fixed so every tet is
    positively oriented.
    """
    corner = lambda dx, dy, dz: (dx, dy, dz)
    tets = []
    for perm in sorted(itertools.permutations(range(3))):
        offs = [np.zeros(3, dtype=np.int64)]
        step = np.zeros(3, dtype=np.int64)
        for axis in perm:
            step = step.copy()
            step[axis] = 1
            offs.append(step)
        tet = np.array(offs)
        e = tet[1:] - tet[0]
        if np.linalg.det(e.T) < 0:
            tet = tet[[0, 2, 1, 3]]
        tets.append(tet)
    return tets


_KUHN_TETS = _kuhn_cell_tets()


def generate_beam(nx: int, ny: int, nz: int, dims: Sequence[float]) -> TetMesh:
    """Axis-aligned beam of nx*ny*nz hex cells, each split into 6 tets.

    The beam occupies [0, dims[0]] x [0, dims[1]] x [0, dims[2]]; the split is
    the Kuhn triangulation, which is face-consistent across neighbouring
    cells, so the total rest volume equals the box volume exactly.
    """
    if not all(isinstance(c, (int, np.integer)) and c >= 1 for c in (nx, ny, nz)):
        raise ValueError(f"cell counts must be integers >= 1, got {(nx, ny, nz)}")
    dims = np.asarray(dims, dtype=np.float64)
    if dims.shape != (3,) or not (np.isfinite(dims).all() and (dims > 0).all()):
        raise ValueError(f"dims must be 3 positive extents, got {dims}")

    counts = np.array([nx, ny, nz])
    xs = [np.linspace(0.0, dims[a], counts[a] + 1) for a in range(3)]
    gx, gy, gz = np.meshgrid(*xs, indexing="ij")
    positions = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])

    def vid(ix, iy, iz):
        return (ix * (ny + 1) + iy) * (nz + 1) + iz

    tets = []
    for ix in range(nx):
        for iy in range(ny):
            for iz in range(nz):
                base = np.array([ix, iy, iz])
                for tet in _KUHN_TETS:
                    tets.append([vid(*(base + off)) for off in tet])
    return TetMesh.from_arrays(positions, np.array(tets, dtype=np.int64))


# ---------------------------------------------------------------------------
# TetGen .node / .ele text formats
# ---------------------------------------------------------------------------


def _records(text: str):
    """Yield (line_number, tokens) for non-comment, non-blank lines."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _parse_ints(tokens, lineno, count, what):
    try:
        vals = [int(t) for t in tokens[:count]]
    except ValueError:
        raise MeshParseError(f"line {lineno}: malformed {what}: {' '.join(tokens)}")
    if len(vals) < count:
        raise MeshParseError(f"line {lineno}: {what} needs {count} fields")
    return vals


def load_tetgen(node_text: str, ele_text: str) -> TetMesh:
    """Build a TetMesh from TetGen .node/.ele file contents.

    0- or 1-based vertex numbering is auto-detected from the minimum index.
    Negatively oriented tets are repaired by swapping two vertices; tets
    whose volume is degenerate relative to the mesh scale are rejected.
    """
    node_iter = _records(node_text)
    try:
        lineno, header = next(node_iter)
    except StopIteration:
        raise MeshParseError("line 1: empty .node file")
    n_pts, dim = _parse_ints(header, lineno, 2, ".node header")[:2]
    if dim != 3:
        raise MeshParseError(f"line {lineno}: expected dimension 3, got {dim}")
    if n_pts < 1:
        raise MeshParseError(f"line {lineno}: point count must be >= 1")

    ids, coords = [], []
    for lineno, tokens in node_iter:
        if len(tokens) < 4:
            raise MeshParseError(f"line {lineno}: point record needs index + 3 coords")
        idx = _parse_ints(tokens, lineno, 1, "point index")[0]
        try:
            xyz = [float(t) for t in tokens[1:4]]
        except ValueError:
            raise MeshParseError(f"line {lineno}: malformed coordinates")
        ids.append(idx)
        coords.append(xyz)
    if len(ids) != n_pts:
        raise MeshParseError(
            f".node header announces {n_pts} points but {len(ids)} records found"
        )
    id_to_row = {i: r for r, i in enumerate(ids)}
    if len(id_to_row) != len(ids):
        raise MeshParseError(".node file repeats a point index")
    positions = np.asarray(coords, dtype=np.float64)

    ele_iter = _records(ele_text)
    try:
        lineno, header = next(ele_iter)
    except StopIteration:
        raise MeshParseError("line 1: empty .ele file")
    n_tets, npt = _parse_ints(header, lineno, 2, ".ele header")[:2]
    if npt != 4:
        raise MeshParseError(f"line {lineno}: expected 4 nodes per tet, got {npt}")

    tets, tet_lines = [], []
    for lineno, tokens in ele_iter:
        vals = _parse_ints(tokens, lineno, 5, "tet record")
        tets.append(vals[1:5])
        tet_lines.append(lineno)
    if len(tets) != n_tets:
        raise MeshParseError(
            f".ele header announces {n_tets} tets but {len(tets)} records found"
        )
    tets = np.asarray(tets, dtype=np.int64)

    for row, lineno in zip(tets, tet_lines):
        for v in row:
            if v not in id_to_row:
                raise MeshParseError(f"line {lineno}: vertex index {v} not in .node file")
    tets = np.vectorize(id_to_row.__getitem__)(tets)

    for k in range(4):
        for l in range(k + 1, 4):
            dup = tets[:, k] == tets[:, l]
            if dup.any():
                raise MeshParseError(
                    f"line {tet_lines[int(np.argmax(dup))]}: degenerate tet "
                    "(repeated vertex)"
                )

    vols = signed_volumes(positions, tets)
    lo, hi = positions.min(axis=0), positions.max(axis=0)
    bbox_vol = float(np.prod(np.maximum(hi - lo, 1e-300)))
    degenerate_floor = 1e-14 * bbox_vol / max(len(tets), 1)
    too_small = np.abs(vols) < degenerate_floor
    if too_small.any():
        raise MeshParseError(
            f"line {tet_lines[int(np.argmax(too_small))]}: degenerate tet "
            f"(|volume| < {degenerate_floor:g})"
        )
    flipped = vols < 0.0
    if flipped.any():
        tets[flipped] = tets[flipped][:, [0, 2, 1, 3]]
    return TetMesh.from_arrays(positions, tets)


def save_tetgen(mesh: TetMesh) -> tuple[str, str]:
    """Serialize a mesh to TetGen .node/.ele text (1-based indices)."""
    node_lines = [f"{mesh.num_vertices} 3 0 0"]
    for i, p in enumerate(mesh.rest_positions, start=1):
        node_lines.append(f"{i} {float(p[0])!r} {float(p[1])!r} {float(p[2])!r}")
    ele_lines = [f"{mesh.num_tets} 4 0"]
    for i, t in enumerate(mesh.tets + 1, start=1):
        ele_lines.append(f"{i} {t[0]} {t[1]} {t[2]} {t[3]}")
    return "\n".join(node_lines) + "\n", "\n".join(ele_lines) + "\n"


# ---------------------------------------------------------------------------
# Handle selection and initial deformations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HalfSpaceSelect:
    """Select vertices by thresholding one coordinate at a bounding-box fraction."""

    axis: Union[str, int]
    op: str  # 'le' or 'ge'
    fraction: float

    def __post_init__(self):
        _axis_index(self.axis)
        if self.op not in ("le", "ge"):
            raise ValueError(f"op must be 'le' or 'ge', got {self.op!r}")
        if not 0.0 <= self.fraction <= 1.0 + 1e-6:
            raise ValueError(f"fraction must lie in [0, 1], got {self.fraction}")


def select_vertices(mesh: TetMesh, predicate: HalfSpaceSelect) -> np.ndarray:
    """Vertex indices inside the half-space; sorted, deterministic."""
    a = _axis_index(predicate.axis)
    lo, hi = mesh.bounding_box()
    threshold = lo[a] + predicate.fraction * (hi[a] - lo[a])
    coord = mesh.rest_positions[:, a]
    mask = coord <= threshold if predicate.op == "le" else coord >= threshold
    return np.flatnonzero(mask).astype(np.int64)


@dataclass(frozen=True)
class Stretch:
    axis: Union[str, int]
    factor: float

    def __post_init__(self):
        _axis_index(self.axis)
        if not self.factor > 0.0:
            raise ValueError(f"stretch factor must be > 0, got {self.factor}")


@dataclass(frozen=True)
class Compress(Stretch):
    """Same mapping as Stretch; separate tag for readable configs (factor < 1)."""


@dataclass(frozen=True)
class Shear:
    shear_axis: Union[str, int]
    along_axis: Union[str, int]
    amount: float

    def __post_init__(self):
        if _axis_index(self.shear_axis) == _axis_index(self.along_axis):
            raise ValueError("shear_axis and along_axis must differ")
        if not np.isfinite(self.amount):
            raise ValueError("shear amount must be finite")


@dataclass(frozen=True)
class Twist:
    axis: Union[str, int]
    angle_deg: float

    def __post_init__(self):
        _axis_index(self.axis)
        if not np.isfinite(self.angle_deg):
            raise ValueError("twist angle must be finite")


@dataclass(frozen=True)
class Bend:
    axis: Union[str, int]
    bend_axis: Union[str, int]
    angle_deg: float

    def __post_init__(self):
        if _axis_index(self.axis) == _axis_index(self.bend_axis):
            raise ValueError("axis and bend_axis must differ")
        if not np.isfinite(self.angle_deg):
            raise ValueError("bend angle must be finite")


@dataclass(frozen=True)
class Translate:
    offset: tuple

    def __post_init__(self):
        off = np.asarray(self.offset, dtype=np.float64)
        if off.shape != (3,) or not np.isfinite(off).all():
            raise ValueError(f"offset must be 3 finite components, got {self.offset}")


DeformationTransform = Union[Stretch, Compress, Shear, Twist, Bend, Translate]


def _normalized_coord(positions: np.ndarray, axis: int) -> np.ndarray:
    """Coordinate along ``axis`` rescaled to [0, 1] over the bounding box."""
    coord = positions[:, axis]
    lo, hi = coord.min(), coord.max()
    if hi - lo <= 0.0:
        return np.zeros_like(coord)
    return (coord - lo) / (hi - lo)


def _rotation_2d(angles: np.ndarray, u: np.ndarray, v: np.ndarray):
    c, s = np.cos(angles), np.sin(angles)
    return c * u - s * v, s * u + c * v


def apply_transform(
    positions: np.ndarray, transform: DeformationTransform
) -> np.ndarray:
    """Map every vertex by the transform; pure, returns a new array.

    Scaling and rotation are anchored at the bounding-box minimum so that a
    beam generated at the origin keeps its base layer fixed; graded
    transforms (twist, bend, shear) ramp linearly with the normalized
    coordinate t in [0, 1] along their reference axis.
    """
    p = np.array(positions, dtype=np.float64)
    lo = p.min(axis=0)
    if isinstance(transform, Stretch):  # covers Compress
        a = _axis_index(transform.axis)
        p[:, a] = lo[a] + (p[:, a] - lo[a]) * transform.factor
    elif isinstance(transform, Shear):
        sa = _axis_index(transform.shear_axis)
        aa = _axis_index(transform.along_axis)
        p[:, sa] += transform.amount * _normalized_coord(p, aa)
    elif isinstance(transform, Twist):
        a = _axis_index(transform.axis)
        u_ax, v_ax = (a + 1) % 3, (a + 2) % 3  # right-handed about the axis
        t = _normalized_coord(p, a)
        angles = np.deg2rad(transform.angle_deg) * t
        u, v = p[:, u_ax] - lo[u_ax], p[:, v_ax] - lo[v_ax]
        ru, rv = _rotation_2d(angles, u, v)
        p[:, u_ax], p[:, v_ax] = lo[u_ax] + ru, lo[v_ax] + rv
    elif isinstance(transform, Bend):
        a = _axis_index(transform.axis)
        b = _axis_index(transform.bend_axis)
        t = _normalized_coord(p, a)
        angles = np.deg2rad(transform.angle_deg) * t
        u_ax, v_ax = (b + 1) % 3, (b + 2) % 3
        u, v = p[:, u_ax] - lo[u_ax], p[:, v_ax] - lo[v_ax]
        ru, rv = _rotation_2d(angles, u, v)
        p[:, u_ax], p[:, v_ax] = lo[u_ax] + ru, lo[v_ax] + rv
    elif isinstance(transform, Translate):
        p += np.asarray(transform.offset, dtype=np.float64)
    else:
        raise ValueError(f"unknown transform: {transform!r}")
    return p


def apply_initial_deformation(
    mesh: TetMesh,
    transform: DeformationTransform,
    handles: Iterable[int],
) -> tuple[np.ndarray, np.ndarray]:
    """Warped start positions for all vertices plus pinned handle targets.

    Every vertex is mapped by the transform (the warm start carries the full
    volume change); the returned targets pin the handle subset at its mapped
    location for the whole solve.  Axis ordering of ``handle_targets``
    follows the sorted handle indices.
    """
    handles = np.asarray(sorted(set(int(h) for h in handles)), dtype=np.int64)
    if handles.size and (handles.min() < 0 or handles.max() >= mesh.num_vertices):
        raise ValueError("handle index out of range")
    initial = apply_transform(mesh.rest_positions, transform)
    return initial, initial[handles].copy()
