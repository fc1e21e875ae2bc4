"""HTTP API over a loaded checkpoint: mode exploration, edit solving, meshes.

State model: the backbone is frozen at load time, so the Gram spectrum is
computed once from a configured sampling spec and never invalidated. Reads
work off an immutable model snapshot grabbed per request; applying an edit
swaps the snapshot atomically under a lock, and undo restores the exact
prior head parameters. The server never overwrites the loaded checkpoint.

Mesh payloads are canonical JSON (sorted keys, no whitespace) of
``{"n_vertices", "n_triangles", "vertices": [...], "triangles": [...]}``
with flat coordinate/index arrays, so identical state and request yield
byte-identical bodies.
"""

from __future__ import annotations

import json
import threading
import uuid
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .edit import EditSolution, solve_edit
from .geometry import SamplingSpec, sample
from .gram import FeatureMatrix, build_feature_matrix, spectrum_of
from .mesher import marching_cubes
from .model import Model, load_model, save_model

DEFAULT_SAMPLING = SamplingSpec("volume", 20000, seed=17)


class MeshRequest(BaseModel):
    head: int = 0
    coefficients: list[tuple[int, float]] = []
    resolution: int = 64


class SolveRequest(BaseModel):
    points: list[list[float]]
    targets: list[float]
    ridge: float | None = None


class SolveComboRequest(BaseModel):
    head: int = 0
    coefficients: list[tuple[int, float]]


class ApplyRequest(BaseModel):
    solution_id: str
    head: int = 0


class ExportRequest(BaseModel):
    path: str


class SessionState:
    def __init__(self, model: Model, sampling: SamplingSpec, resolution_cap: int,
                 loaded_path: Path | None):
        self.model = model
        self.sampling = sampling
        self.resolution_cap = resolution_cap
        self.loaded_path = loaded_path
        self.lock = threading.Lock()
        self.solutions: dict[str, EditSolution] = {}
        self.edit_log: list[tuple[int, np.ndarray, float, str]] = []
        points = sample(sampling, model.field(0))
        self.spectrum = spectrum_of(build_feature_matrix(model, points, sampling))


def _mesh_payload(mesh) -> Response:
    body = json.dumps(
        {
            "n_vertices": len(mesh.vertices),
            "n_triangles": len(mesh.triangles),
            "vertices": [float(x) for x in mesh.vertices.ravel()],
            "triangles": [int(i) for i in mesh.triangles.ravel()],
        },
        sort_keys=True,
        separators=(",", ":"),
    )
    return Response(content=body, media_type="application/json")


def create_app(
    checkpoint,
    sampling: SamplingSpec = DEFAULT_SAMPLING,
    resolution_cap: int = 128,
    ui_dir=None,
) -> FastAPI:
    if isinstance(checkpoint, Model):
        model, loaded_path = checkpoint, None
    else:
        loaded_path = Path(checkpoint).resolve()
        model = load_model(loaded_path)
    state = SessionState(model, sampling, resolution_cap, loaded_path)

    app = FastAPI(title="gramedit service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.session = state

    def _head_or_404(m: Model, idx: int):
        if not 0 <= idx < len(m.heads):
            raise HTTPException(404, f"head {idx} not found ({len(m.heads)} heads)")
        return m.heads[idx]

    def _check_resolution(res: int):
        if res > state.resolution_cap:
            raise HTTPException(
                422, f"resolution {res} exceeds the server cap {state.resolution_cap}"
            )
        if res < 2:
            raise HTTPException(422, "resolution must be >= 2")

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.get("/api/model")
    def model_info():
        m = state.model
        return {
            "input_dim": m.input_dim,
            "hidden_dim": m.hidden_dim,
            "depth": m.depth,
            "omega0": m.omega0,
            "heads": [{"index": i, "label": h.label} for i, h in enumerate(m.heads)],
        }

    @app.get("/api/modes")
    def modes(k: int = 10):
        lam = state.spectrum.eigenvalues
        clamped = k > lam.size
        k_eff = max(0, min(k, lam.size))
        return {
            "eigenvalues": [float(x) for x in lam[:k_eff]],
            "rank": state.spectrum.rank(),
            "k": k_eff,
            "clamped": clamped,
            "n_points": state.sampling.n_points,
        }

    @app.post("/api/mesh")
    def mesh(req: MeshRequest):
        _check_resolution(req.resolution)
        m = state.model
        head = _head_or_404(m, req.head)
        lam = state.spectrum.eigenvalues
        V = state.spectrum.eigenvectors
        weights = head.weights.copy()
        for k, alpha in req.coefficients:
            if not 0 <= k < lam.size:
                raise HTTPException(422, f"mode index {k} out of range")
            weights += alpha * V[:, k]
        preview = m.copy()
        preview.heads[req.head].weights = weights
        return _mesh_payload(
            marching_cubes(preview.field(req.head), (-1.0, 1.0), req.resolution)
        )

    @app.post("/api/edit/solve")
    def edit_solve(req: SolveRequest):
        if len(req.points) != len(req.targets):
            raise HTTPException(
                422, f"{len(req.points)} points but {len(req.targets)} targets"
            )
        if not req.points:
            raise HTTPException(422, "empty edit payload")
        m = state.model
        points = np.asarray(req.points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != m.input_dim:
            raise HTTPException(422, f"points must be (N, {m.input_dim})")
        fm = FeatureMatrix(m.features(points), points)
        solution = solve_edit(fm, np.asarray(req.targets), ridge=req.ridge or 0.0)
        sid = uuid.uuid4().hex
        state.solutions[sid] = solution
        return {
            "solution_id": sid,
            "eta": solution.eta,
            "norm": float(np.linalg.norm(solution.delta_theta)),
        }

    @app.post("/api/edit/solve-combo")
    def edit_solve_combo(req: SolveComboRequest):
        # eigenmode combinations are realizable by construction: the update
        # is the mode combination itself, so no least-squares pass is needed
        m = state.model
        _head_or_404(m, req.head)
        lam = state.spectrum.eigenvalues
        V = state.spectrum.eigenvectors
        rank = state.spectrum.rank()
        delta = np.zeros(m.hidden_dim)
        for k, alpha in req.coefficients:
            if not 0 <= k < lam.size:
                raise HTTPException(422, f"mode index {k} out of range")
            if k >= rank:
                raise HTTPException(422, f"mode {k} is below the rank threshold")
            delta += alpha * V[:, k]
        solution = EditSolution(
            delta, np.zeros(0), np.zeros(0), eta=1.0, ridge=0.0
        )
        sid = uuid.uuid4().hex
        state.solutions[sid] = solution
        return {
            "solution_id": sid,
            "eta": 1.0,
            "norm": float(np.linalg.norm(delta)),
        }

    @app.post("/api/edit/apply")
    def edit_apply(req: ApplyRequest):
        solution = state.solutions.get(req.solution_id)
        if solution is None:
            raise HTTPException(404, f"unknown solution id {req.solution_id!r}")
        with state.lock:
            m = state.model
            head = _head_or_404(m, req.head)
            if solution.delta_theta.shape != head.weights.shape:
                raise HTTPException(422, "solution dimension does not match the head")
            state.edit_log.append(
                (req.head, head.weights.copy(), head.bias, req.solution_id)
            )
            updated = m.copy()
            updated.heads[req.head].weights = head.weights + solution.delta_theta
            state.model = updated
        return {"applied": True, "head": req.head, "edits": len(state.edit_log)}

    @app.post("/api/edit/undo")
    def edit_undo():
        with state.lock:
            if not state.edit_log:
                raise HTTPException(409, "edit log is empty")
            head_index, weights, bias, sid = state.edit_log.pop()
            restored = state.model.copy()
            restored.heads[head_index].weights = weights
            restored.heads[head_index].bias = bias
            state.model = restored
        return {"undone": True, "head": head_index, "solution_id": sid,
                "edits": len(state.edit_log)}

    @app.get("/api/heads/blend")
    def heads_blend(a: int, b: int, t: float, resolution: int = 64):
        _check_resolution(resolution)
        m = state.model
        ha = _head_or_404(m, a)
        hb = _head_or_404(m, b)
        preview = m.copy()
        preview.heads[a].weights = (1.0 - t) * ha.weights + t * hb.weights
        preview.heads[a].bias = (1.0 - t) * ha.bias + t * hb.bias
        return _mesh_payload(marching_cubes(preview.field(a), (-1.0, 1.0), resolution))

    @app.post("/api/export")
    def export(req: ExportRequest):
        target = Path(req.path).resolve()
        if state.loaded_path is not None and target == state.loaded_path:
            raise HTTPException(409, "refusing to overwrite the loaded checkpoint")
        save_model(state.model, target)
        return {"path": str(target)}

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
