import numpy as np
import pytest

from gramedit.errors import FormatError, InputError
from gramedit.geometry import AnalyticShape
from gramedit.mesher import (
    Mesh,
    chamfer_hausdorff,
    export_field_grid,
    export_mesh,
    load_field_grid,
    load_obj,
    marching_cubes,
    sample_surface,
)


def euler_characteristic(mesh):
    edges = set()
    for a, b, c in mesh.triangles:
        for u, v in ((a, b), (b, c), (c, a)):
            edges.add((min(u, v), max(u, v)))
    return len(np.unique(mesh.triangles)) - len(edges) + len(mesh.triangles)


# ---------------------------------------------------------------------------
# marching cubes
# ---------------------------------------------------------------------------

def test_constant_field_empty_mesh():
    mesh = marching_cubes(lambda p: np.ones(len(p)), (-1, 1), 8)
    assert mesh.is_empty


def test_plane_field_vertices_on_plane():
    mesh = marching_cubes(lambda p: p[:, 2], (-1, 1), 16)
    assert not mesh.is_empty
    assert np.abs(mesh.vertices[:, 2]).max() <= 1e-6


def test_sphere_radial_accuracy():
    shape = AnalyticShape("sphere")  # r = 0.5
    mesh = marching_cubes(shape.sdf, (-1, 1), 64)
    radii = np.linalg.norm(mesh.vertices, axis=1)
    cell = 2.0 / 64
    assert np.abs(radii - 0.5).max() <= 2 * cell


def test_resolution_precondition():
    with pytest.raises(InputError):
        marching_cubes(lambda p: p[:, 0], (-1, 1), 1)


def test_watertight_euler_characteristic_sphere():
    # generic radius so the surface misses grid points exactly on lattice axes
    shape = AnalyticShape("sphere", {"r": 0.437})
    mesh = marching_cubes(shape.sdf, (-1, 1), 48)
    assert euler_characteristic(mesh) == 2


def test_no_degenerate_triangles():
    shape = AnalyticShape("sphere")
    mesh = marching_cubes(shape.sdf, (-1, 1), 32)
    assert mesh.areas().min() > 1e-12


def test_mesh_index_validation():
    with pytest.raises(InputError):
        Mesh(np.zeros((2, 3)), np.array([[0, 1, 2]]))


# ---------------------------------------------------------------------------
# surface sampling
# ---------------------------------------------------------------------------

def test_single_triangle_barycentric():
    mesh = Mesh(np.array([[0.0, 0, 0], [1.0, 0, 0], [0.0, 1, 0]]), np.array([[0, 1, 2]]))
    pts = sample_surface(mesh, 500, seed=1)
    assert np.all(pts[:, 2] == 0)
    assert np.all(pts[:, 0] >= 0) and np.all(pts[:, 1] >= 0)
    assert np.all(pts[:, 0] + pts[:, 1] <= 1.0 + 1e-12)


def test_area_weighted_sampling():
    # two triangles with area ratio 9:1
    verts = np.array([
        [0, 0, 0], [3, 0, 0], [0, 3, 0],   # area 4.5
        [10, 0, 0], [11, 0, 0], [10, 1, 0],  # area 0.5
    ], dtype=float)
    mesh = Mesh(verts, np.array([[0, 1, 2], [3, 4, 5]]))
    pts = sample_surface(mesh, 10000, seed=2)
    big = np.sum(pts[:, 0] < 5)
    assert big == pytest.approx(9000, abs=3 * np.sqrt(10000 * 0.9 * 0.1))


def test_sampling_deterministic():
    mesh = marching_cubes(AnalyticShape("sphere").sdf, (-1, 1), 16)
    assert np.array_equal(sample_surface(mesh, 100, 7), sample_surface(mesh, 100, 7))


def test_sampling_empty_mesh_error():
    with pytest.raises(InputError):
        sample_surface(Mesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=int)), 10, 0)


# ---------------------------------------------------------------------------
# chamfer / hausdorff
# ---------------------------------------------------------------------------

def test_identical_sets_zero():
    pts = np.random.default_rng(0).normal(size=(100, 3))
    m = chamfer_hausdorff(pts, pts)
    assert m.cd == 0.0 and m.hd == 0.0


def test_single_pair_arithmetic():
    m = chamfer_hausdorff(np.array([[0.0, 0, 0]]), np.array([[0.0, 0, 0.1]]))
    assert m.cd == pytest.approx(0.01, rel=1e-12)
    assert m.hd == pytest.approx(0.1, rel=1e-12)


def test_concentric_spheres_hausdorff():
    a = marching_cubes(AnalyticShape("sphere", {"r": 0.5}).sdf, (-1, 1), 64)
    b = marching_cubes(AnalyticShape("sphere", {"r": 0.55}).sdf, (-1, 1), 64)
    m = chamfer_hausdorff(sample_surface(a, 100000, 1), sample_surface(b, 100000, 2))
    assert m.hd == pytest.approx(0.05, abs=0.005)


def test_metric_symmetry_exact():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=(200, 3)), rng.normal(size=(150, 3))
    m1, m2 = chamfer_hausdorff(a, b), chamfer_hausdorff(b, a)
    assert m1.cd == m2.cd and m1.hd == m2.hd


def test_translation_invariance():
    rng = np.random.default_rng(2)
    a, b = rng.normal(size=(200, 3)), rng.normal(size=(150, 3))
    shift = np.array([10.0, -3.0, 0.5])
    m1 = chamfer_hausdorff(a, b)
    m2 = chamfer_hausdorff(a + shift, b + shift)
    assert m1.cd == pytest.approx(m2.cd, abs=1e-12)
    assert m1.hd == pytest.approx(m2.hd, abs=1e-12)


def test_hd_equals_sqrt_of_max_cd_contribution():
    from scipy.spatial import cKDTree

    rng = np.random.default_rng(3)
    a, b = rng.normal(size=(80, 3)), rng.normal(size=(60, 3))
    m = chamfer_hausdorff(a, b)
    d_ab, _ = cKDTree(b).query(a)
    d_ba, _ = cKDTree(a).query(b)
    max_term = max((d_ab**2).max(), (d_ba**2).max())
    assert m.hd == pytest.approx(np.sqrt(max_term), rel=1e-12)
    assert m.hd >= np.sqrt(max_term) - 1e-15


def test_empty_set_error():
    with pytest.raises(InputError):
        chamfer_hausdorff(np.zeros((0, 3)), np.zeros((5, 3)))


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------

def test_obj_round_trip(tmp_path):
    mesh = marching_cubes(AnalyticShape("sphere").sdf, (-1, 1), 16)
    path = tmp_path / "m.obj"
    export_mesh(mesh, path)
    loaded = load_obj(path)
    assert len(loaded.vertices) == len(mesh.vertices)
    assert len(loaded.triangles) == len(mesh.triangles)
    assert np.array_equal(loaded.triangles, mesh.triangles)
    assert np.array_equal(loaded.vertices, mesh.vertices)  # repr round-trips floats


def test_empty_mesh_valid_obj(tmp_path):
    path = tmp_path / "empty.obj"
    export_mesh(Mesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=int)), path)
    loaded = load_obj(path)
    assert loaded.is_empty


def test_grid_export_constant_field(tmp_path):
    path = tmp_path / "grid.bin"
    export_field_grid(lambda p: np.full(len(p), 0.75), (-1, 1), 4, path)
    vals, (lo, hi) = load_field_grid(path)
    assert vals.shape == (5, 5, 5)
    assert np.all(vals == np.float32(0.75))
    assert np.array_equal(lo, [-1, -1, -1]) and np.array_equal(hi, [1, 1, 1])


def test_grid_round_trip_values(tmp_path):
    shape = AnalyticShape("sphere")
    path = tmp_path / "grid.bin"
    export_field_grid(shape.sdf, (-1, 1), 8, path)
    vals, _ = load_field_grid(path)
    xs = np.linspace(-1, 1, 9)
    grid = np.stack(np.meshgrid(xs, xs, xs, indexing="ij"), axis=-1).reshape(-1, 3)
    assert np.allclose(vals.ravel(), shape.sdf(grid).astype(np.float32))


def test_grid_bad_magic(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOTAGRIDFILE")
    with pytest.raises(FormatError):
        load_field_grid(path)
