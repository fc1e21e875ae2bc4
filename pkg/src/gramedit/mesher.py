"""Zero level set extraction and point-set geometry metrics.

Marching cubes runs on a uniform grid with linear interpolation along cell
edges; vertices are shared through global edge keys, so meshes of smooth
closed surfaces come out watertight. Chamfer distance here is the symmetric
MEAN SQUARED nearest-neighbor distance and Hausdorff the symmetric max-min
(unsquared); both use exact nearest neighbors.

Field grid container (magic ``GENIEGRIDv1``): <3I> grid points per axis,
<6d> bounds (lo xyz, hi xyz), then float32 little-endian values in C order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ._mc_tables import EDGE_TABLE, TRI_TABLE
from .errors import FormatError, InputError
from .geometry import _box

GRID_MAGIC = b"GENIEGRIDv1"

# cube corner offsets (standard ordering) and edge -> (base corner offset, axis)
_CORNERS = [(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0),
            (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1)]
_EDGE_DEF = [((0, 0, 0), 0), ((1, 0, 0), 1), ((0, 1, 0), 0), ((0, 0, 0), 1),
             ((0, 0, 1), 0), ((1, 0, 1), 1), ((0, 1, 1), 0), ((0, 0, 1), 1),
             ((0, 0, 0), 2), ((1, 0, 0), 2), ((1, 1, 0), 2), ((0, 1, 0), 2)]


@dataclass
class Mesh:
    vertices: np.ndarray  # (V, 3)
    triangles: np.ndarray  # (T, 3) int indices

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if self.triangles.size and (
            self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices)
        ):
            raise InputError("triangle indices out of range")

    @property
    def is_empty(self) -> bool:
        return len(self.triangles) == 0

    def areas(self) -> np.ndarray:
        a = self.vertices[self.triangles[:, 0]]
        b = self.vertices[self.triangles[:, 1]]
        c = self.vertices[self.triangles[:, 2]]
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


@dataclass
class MetricResult:
    cd: float  # mean symmetric squared nearest-neighbor distance
    hd: float  # max symmetric nearest-neighbor distance
    n_samples: int


def marching_cubes(field_fn, bounds=(-1.0, 1.0), resolution: int = 64) -> Mesh:
    """Triangulate the zero level set of field_fn on a uniform grid.

    resolution counts cells per axis (grid has resolution+1 points per axis);
    field_fn must accept an (M, 3) array. A field with no sign change yields
    an empty mesh. Zero-area triangles (below 1e-12) are dropped.
    """
    if resolution < 2:
        raise InputError(f"resolution must be >= 2, got {resolution}")
    lo, hi = _box(bounds)
    n = resolution + 1
    axes = [np.linspace(lo[i], hi[i], n) for i in range(3)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    vals = np.asarray(field_fn(grid.reshape(-1, 3)), dtype=np.float64).reshape(n, n, n)
    # nudge exact zeros off the surface so corner classification is unambiguous
    vals[vals == 0.0] = 1e-300

    inside = vals < 0.0
    idx = np.zeros((resolution,) * 3, dtype=np.uint16)
    for bit, (dx, dy, dz) in enumerate(_CORNERS):
        idx |= inside[dx : dx + resolution, dy : dy + resolution, dz : dz + resolution].astype(np.uint16) << bit

    active = np.argwhere((idx != 0) & (idx != 255))
    verts: list[np.ndarray] = []
    vert_ids: dict[tuple, int] = {}
    tris: list[tuple[int, int, int]] = []

    def edge_vertex(ci, cj, ck, edge):
        (ox, oy, oz), axis = _EDGE_DEF[edge]
        base = (ci + ox, cj + oy, ck + oz)
        key = (*base, axis)
        vid = vert_ids.get(key)
        if vid is not None:
            return vid
        other = list(base)
        other[axis] += 1
        v1 = vals[base]
        v2 = vals[tuple(other)]
        t = v1 / (v1 - v2)
        p = np.array([axes[0][base[0]], axes[1][base[1]], axes[2][base[2]]])
        p[axis] += t * (axes[axis][other[axis]] - axes[axis][base[axis]])
        vid = len(verts)
        verts.append(p)
        vert_ids[key] = vid
        return vid

    for ci, cj, ck in active:
        row = TRI_TABLE[idx[ci, cj, ck]]
        for e0, e1, e2 in zip(row[0::3], row[1::3], row[2::3]):
            if e0 < 0:
                break
            tris.append(
                (
                    edge_vertex(ci, cj, ck, e0),
                    edge_vertex(ci, cj, ck, e1),
                    edge_vertex(ci, cj, ck, e2),
                )
            )

    if not tris:
        return Mesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    mesh = Mesh(np.array(verts), np.array(tris, dtype=np.int64))
    keep = mesh.areas() > 1e-12
    return Mesh(mesh.vertices, mesh.triangles[keep])


def sample_surface(mesh: Mesh, n: int, seed: int) -> np.ndarray:
    """n points drawn area-weighted uniformly over the triangles."""
    if mesh.is_empty:
        raise InputError("cannot sample an empty mesh")
    areas = mesh.areas()
    total = areas.sum()
    if total <= 0:
        raise InputError("mesh has zero total area")
    rng = np.random.default_rng(seed)
    tri = rng.choice(len(areas), size=n, p=areas / total)
    u = rng.random(n)
    v = rng.random(n)
    over = u + v > 1.0
    u[over] = 1.0 - u[over]
    v[over] = 1.0 - v[over]
    a = mesh.vertices[mesh.triangles[tri, 0]]
    b = mesh.vertices[mesh.triangles[tri, 1]]
    c = mesh.vertices[mesh.triangles[tri, 2]]
    return a + u[:, None] * (b - a) + v[:, None] * (c - a)


def chamfer_hausdorff(points_a, points_b) -> MetricResult:
    """Exact symmetric Chamfer (squared) and Hausdorff distances between point sets."""
    a = np.asarray(points_a, dtype=np.float64).reshape(-1, 3)
    b = np.asarray(points_b, dtype=np.float64).reshape(-1, 3)
    if len(a) == 0 or len(b) == 0:
        raise InputError("point sets must be non-empty")
    d_ab, _ = cKDTree(b).query(a, k=1)
    d_ba, _ = cKDTree(a).query(b, k=1)
    cd = 0.5 * (float(np.mean(d_ab**2)) + float(np.mean(d_ba**2)))
    hd = max(float(d_ab.max()), float(d_ba.max()))
    return MetricResult(cd, hd, len(a) + len(b))


def mesh_metrics(mesh_a: Mesh, mesh_b: Mesh, n: int = 100_000, seed: int = 0) -> MetricResult:
    """CD/HD between two meshes via area-weighted surface samples (default 100k each)."""
    return chamfer_hausdorff(
        sample_surface(mesh_a, n, seed), sample_surface(mesh_b, n, seed + 1)
    )


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------

def export_mesh(mesh: Mesh, path) -> None:
    """ASCII OBJ with v/f records and 1-based indices; empty meshes are valid."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# {len(mesh.vertices)} vertices, {len(mesh.triangles)} triangles\n")
        for x, y, z in mesh.vertices:
            f.write(f"v {float(x)!r} {float(y)!r} {float(z)!r}\n")
        for i, j, k in mesh.triangles:
            f.write(f"f {i + 1} {j + 1} {k + 1}\n")


def load_obj(path) -> Mesh:
    verts, tris = [], []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                tris.append([int(x.split("/")[0]) - 1 for x in parts[1:4]])
    return Mesh(
        np.asarray(verts, dtype=np.float64).reshape(-1, 3),
        np.asarray(tris, dtype=np.int64).reshape(-1, 3),
    )


def export_field_grid(field_fn, bounds, resolution: int, path) -> None:
    lo, hi = _box(bounds)
    n = resolution + 1
    axes = [np.linspace(lo[i], hi[i], n) for i in range(3)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    vals = np.asarray(field_fn(grid.reshape(-1, 3)), dtype="<f4")
    with open(path, "wb") as f:
        f.write(GRID_MAGIC)
        f.write(struct.pack("<3I", n, n, n))
        f.write(struct.pack("<6d", *lo, *hi))
        f.write(vals.tobytes())


def load_field_grid(path):
    with open(path, "rb") as f:
        magic = f.read(len(GRID_MAGIC))
        if magic != GRID_MAGIC:
            raise FormatError(f"not a field grid file (magic {magic!r})")
        header = f.read(struct.calcsize("<3I6d"))
        if len(header) != struct.calcsize("<3I6d"):
            raise FormatError("truncated field grid header")
        nx, ny, nz, *bounds = struct.unpack("<3I6d", header)
        payload = f.read(4 * nx * ny * nz)
        if len(payload) != 4 * nx * ny * nz:
            raise FormatError("truncated field grid payload")
        vals = np.frombuffer(payload, dtype="<f4").reshape(nx, ny, nz)
    lo, hi = np.array(bounds[:3]), np.array(bounds[3:])
    return vals, (lo, hi)
