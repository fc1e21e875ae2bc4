import json
import threading

import numpy as np
import pytest
from fastapi.testclient import TestClient

from gramedit.cli import cmd_train
from gramedit.geometry import SamplingSpec, sample
from gramedit.gram import build_feature_matrix, spectrum_of
from gramedit.mesher import marching_cubes
from gramedit.model import load_model
from gramedit.service import create_app

SAMPLING = SamplingSpec("volume", 2000, seed=11)


@pytest.fixture(scope="module")
def checkpoint(tmp_path_factory):
    out = tmp_path_factory.mktemp("svc") / "run"
    cmd_train({
        "seed": 3,
        "out_dir": str(out),
        "shape": "sphere:r=0.5",
        "deformations": ["sh:2,0:eps=0.08"],
        "model": {"hidden_dim": 16, "depth": 2, "omega0": 10.0},
        "train": {"epochs": 60, "batch_size": 512, "learning_rate": 2e-3,
                  "seed": 3, "n_train_points": 1200},
        "sampling": {"mode": "volume", "n_points": 1200, "seed": 3},
    })
    return out / "model.ckpt"


@pytest.fixture()
def client(checkpoint):
    app = create_app(str(checkpoint), sampling=SAMPLING, resolution_cap=64)
    with TestClient(app) as c:
        yield c


def test_health(client):
    assert client.get("/api/health").json() == {"status": "ok"}


def test_model_metadata_matches_checkpoint(client, checkpoint):
    model = load_model(checkpoint)
    info = client.get("/api/model").json()
    assert info["hidden_dim"] == model.hidden_dim
    assert info["depth"] == model.depth
    assert [h["label"] for h in info["heads"]] == model.head_labels
    assert client.get("/api/no/such/route").status_code == 404


def test_modes_endpoint(client, checkpoint):
    r = client.get("/api/modes?k=0").json()
    assert r["eigenvalues"] == [] and not r["clamped"]
    r = client.get("/api/modes?k=999").json()
    assert r["clamped"] and len(r["eigenvalues"]) == 16
    # values match an offline spectrum of the same sampling spec
    model = load_model(checkpoint)
    pts = sample(SAMPLING, model.field(0))
    spectrum = spectrum_of(build_feature_matrix(model, pts))
    assert np.allclose(r["eigenvalues"], spectrum.eigenvalues, rtol=1e-12)


def test_mesh_preview_deterministic_and_matches_base(client, checkpoint):
    payload = {"head": 0, "coefficients": [], "resolution": 16}
    r1 = client.post("/api/mesh", json=payload)
    r2 = client.post("/api/mesh", json=payload)
    assert r1.content == r2.content
    # zero coefficients reproduce the base mesh payload exactly
    model = load_model(checkpoint)
    mesh = marching_cubes(model.field(0), (-1.0, 1.0), 16)
    body = json.loads(r1.content)
    assert body["n_vertices"] == len(mesh.vertices)
    assert np.allclose(np.array(body["vertices"]).reshape(-1, 3), mesh.vertices)
    assert np.array_equal(
        np.array(body["triangles"]).reshape(-1, 3), mesh.triangles
    )


def test_mesh_coefficient_antisymmetry(client, checkpoint):
    # the +alpha and -alpha previews bracket the base field symmetrically
    model = load_model(checkpoint)
    pts = sample(SAMPLING, model.field(0))
    spectrum = spectrum_of(build_feature_matrix(model, pts))
    v0 = spectrum.eigenvectors[:, 0]
    for alpha in (0.05, -0.05):
        body = client.post(
            "/api/mesh",
            json={"head": 0, "coefficients": [[0, alpha]], "resolution": 16},
        )
        shifted = model.copy()
        shifted.heads[0].weights = shifted.heads[0].weights + alpha * v0
        mesh = marching_cubes(shifted.field(0), (-1.0, 1.0), 16)
        parsed = json.loads(body.content)
        assert parsed["n_vertices"] == len(mesh.vertices)
        assert np.allclose(np.array(parsed["vertices"]).reshape(-1, 3), mesh.vertices)


def test_mesh_resolution_cap(client):
    r = client.post("/api/mesh", json={"resolution": 65})
    assert r.status_code == 422
    assert "64" in r.json()["detail"]


def test_mesh_invalid_head(client):
    assert client.post("/api/mesh", json={"head": 7}).status_code == 404


def test_solve_apply_undo_cycle(client):
    before = client.post("/api/mesh", json={"resolution": 12}).content
    pts = np.random.default_rng(1).uniform(-1, 1, (80, 3)).tolist()
    sol = client.post(
        "/api/edit/solve", json={"points": pts, "targets": [0.02] * 80}
    ).json()
    assert 0.0 <= sol["eta"] <= 1.0
    r = client.post("/api/edit/apply", json={"solution_id": sol["solution_id"], "head": 0})
    assert r.json()["applied"]
    after = client.post("/api/mesh", json={"resolution": 12}).content
    assert after != before
    assert client.post("/api/edit/undo").json()["undone"]
    restored = client.post("/api/mesh", json={"resolution": 12}).content
    assert restored == before  # bit-identical model after undo


def test_solve_in_span_payload(client, checkpoint):
    # target built from the model's own features: eta = 1
    model = load_model(checkpoint)
    pts = np.random.default_rng(2).uniform(-1, 1, (120, 3))
    direction = np.random.default_rng(3).normal(size=16) * 0.01
    targets = (model.features(pts) @ direction).tolist()
    sol = client.post(
        "/api/edit/solve", json={"points": pts.tolist(), "targets": targets}
    ).json()
    assert sol["eta"] == pytest.approx(1.0, abs=1e-8)


def test_solve_zero_target(client):
    pts = np.random.default_rng(4).uniform(-1, 1, (30, 3)).tolist()
    sol = client.post("/api/edit/solve", json={"points": pts, "targets": [0.0] * 30}).json()
    assert sol["norm"] == 0.0


def test_solve_validation(client):
    pts = [[0.0, 0.0, 0.0]] * 5
    assert client.post(
        "/api/edit/solve", json={"points": pts, "targets": [0.0] * 4}
    ).status_code == 422
    assert client.post(
        "/api/edit/solve", json={"points": [], "targets": []}
    ).status_code == 422


def test_apply_unknown_id_and_undo_conflict(client):
    assert client.post(
        "/api/edit/apply", json={"solution_id": "nope", "head": 0}
    ).status_code == 404
    assert client.post("/api/edit/undo").status_code == 409  # log empty


def test_blend_endpoint(client, checkpoint):
    base = client.post("/api/mesh", json={"head": 0, "resolution": 12}).content
    r = client.get("/api/heads/blend", params={"a": 0, "b": 1, "t": 0.0, "resolution": 12})
    assert r.status_code == 200
    assert r.content == base  # t=0 -> head-a mesh byte-identical
    assert client.get(
        "/api/heads/blend", params={"a": 0, "b": 1, "t": 1.5, "resolution": 12}
    ).status_code == 200  # extrapolation allowed
    assert client.get(
        "/api/heads/blend", params={"a": 0, "b": 9, "t": 0.5, "resolution": 12}
    ).status_code == 404


def test_export_endpoint(client, checkpoint, tmp_path):
    r = client.post("/api/export", json={"path": str(checkpoint)})
    assert r.status_code == 409  # refuses to overwrite the loaded checkpoint
    target = tmp_path / "exported.ckpt"
    r = client.post("/api/export", json={"path": str(target)})
    assert r.status_code == 200
    exported = load_model(target)
    assert exported.head_labels == load_model(checkpoint).head_labels


def test_concurrent_reads_see_consistent_snapshots(client):
    payload = {"head": 0, "resolution": 12}
    baseline = client.post("/api/mesh", json=payload).content
    pts = np.random.default_rng(5).uniform(-1, 1, (60, 3)).tolist()
    sol = client.post("/api/edit/solve", json={"points": pts, "targets": [0.05] * 60}).json()

    results = []
    def reader():
        for _ in range(4):
            results.append(client.post("/api/mesh", json=payload).content)

    threads = [threading.Thread(target=reader) for _ in range(4)]
    for t in threads:
        t.start()
    client.post("/api/edit/apply", json={"solution_id": sol["solution_id"], "head": 0})
    for t in threads:
        t.join()
    edited = client.post("/api/mesh", json=payload).content
    client.post("/api/edit/undo")
    # every concurrent read observed either the pre- or post-apply model
    assert set(results) <= {baseline, edited}
