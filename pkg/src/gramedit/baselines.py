"""Comparison methods for the editing study: iterative and linearized baselines.

Five methods are compared on shared sample points (sampling and mesh
extraction are excluded from every timer; each method's own math, including
any finite-difference gradients it needs, is included):

  genie        one closed-form ridge update from SDF residuals (steps = 1)
  bs-l-last    linearized normal-displacement targets -grad(f).V at
               near-surface points, solved as a last-layer ridge update
  gd-sdf-last  plain gradient descent on the SDF regression loss, head
               weights only
  gd-bs-last   gradient descent on the linearized-target proxy objective,
               head weights only
  gd-bs-all    same proxy objective, but updating every network parameter

Learning-rate defaults come from a coarse grid search over the standard
analytic edit suite (scripts/lr_grid_search.py reruns it); the step count
default is 400.
"""

from __future__ import annotations

import csv
import time
import zlib
from dataclasses import dataclass, field

import numpy as np

from .edit import default_ridge, solve_edit
from .errors import InputError
from .geometry import SamplingSpec, sample
from .gram import FeatureMatrix, gram_of
from .mesher import Mesh, chamfer_hausdorff, marching_cubes, sample_surface
from .model import Model
from .training import loss_and_grads

GD_STEPS = 400
FD_STEP = 1e-3
DEGENERATE_GRAD = 1e-6

# tuned on the analytic suite; see scripts/lr_grid_search.py
DEFAULT_LR = {
    "gd-sdf-last": 3e-2,
    "gd-bs-last": 3e-2,
    "gd-bs-all": 1e-2,
}


@dataclass
class BaselineReport:
    method: str  # genie | bs-l-last | gd-sdf-last | gd-bs-last | gd-bs-all
    wall_time: float
    cd: float = float("nan")
    hd: float = float("nan")
    steps: int = 1
    diverged: bool = False
    dropped_samples: int = 0
    losses: list = field(default_factory=list, repr=False)


def _points_of(model: Model, head: int, sampling) -> np.ndarray:
    if isinstance(sampling, SamplingSpec):
        return sample(sampling, model.field(head))
    return np.asarray(sampling, dtype=np.float64)


def fd_gradient(field_fn, pts: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    """Spatial gradient by central finite differences, axis by axis."""
    grads = np.empty_like(pts)
    for axis in range(pts.shape[1]):
        e = np.zeros(pts.shape[1])
        e[axis] = step
        grads[:, axis] = (np.asarray(field_fn(pts + e)) - np.asarray(field_fn(pts - e))) / (
            2.0 * step
        )
    return grads


def genie_edit(model: Model, head: int, target_field_fn, sampling, ridge: float | None = None):
    """The one-shot closed-form ridge update, packaged as a baseline row."""
    points = _points_of(model, head, sampling)
    fm = FeatureMatrix(model.features(points), points)
    current = fm.data @ model.heads[head].weights + model.heads[head].bias
    y = np.asarray(target_field_fn(points), dtype=np.float64) - current
    if ridge is None:
        ridge = default_ridge(gram_of(fm))
    solution = solve_edit(fm, y, ridge=ridge)
    edited = model.copy()
    edited.heads[head].weights = edited.heads[head].weights + solution.delta_theta
    return edited, BaselineReport("genie", solution.solve_time, steps=1)


def gd_sdf_last(
    model: Model,
    head: int,
    target_field_fn,
    sampling,
    steps: int = GD_STEPS,
    lr: float | None = None,
):
    """Plain gradient descent on the SDF regression MSE, head weights only.

    The objective is convex in the head, so with a small enough rate the loss
    sequence is non-increasing; divergence is recorded in the report rather
    than raised. steps=0 returns the model unchanged.
    """
    if steps < 0:
        raise InputError("steps must be >= 0")
    lr = DEFAULT_LR["gd-sdf-last"] if lr is None else lr
    points = _points_of(model, head, sampling)
    H = model.features(points)
    targets = np.asarray(target_field_fn(points), dtype=np.float64)
    edited = model.copy()
    w = edited.heads[head].weights
    b = edited.heads[head].bias
    n = len(points)

    t0 = time.perf_counter()
    losses = []
    diverged = False
    done = 0
    for step in range(steps):
        err = H @ w + b - targets
        losses.append(float(err @ err) / n)
        if not np.isfinite(losses[-1]):
            diverged = True
            break
        w = w - lr * (2.0 / n) * (H.T @ err)
        done = step + 1
    wall = time.perf_counter() - t0
    edited.heads[head].weights = w
    return edited, BaselineReport(
        "gd-sdf-last", wall, steps=done, diverged=diverged, losses=losses
    )


def bs_linearized_last(
    model: Model,
    head: int,
    displacement_field,
    sampling,
    ridge: float | None = None,
    fd_step: float = FD_STEP,
):
    """Last-layer ridge update from linearized normal-displacement targets.

    At near-surface points, displacing the geometry by V changes the field by
    -grad(f).V to first order; those values become the regression targets.
    Samples with a degenerate spatial gradient (norm < 1e-6) are dropped and
    counted in the report.
    """
    points = _points_of(model, head, sampling)
    field_fn = model.field(head)

    t0 = time.perf_counter()
    grads = fd_gradient(field_fn, points, fd_step)
    norms = np.linalg.norm(grads, axis=1)
    keep = norms >= DEGENERATE_GRAD
    dropped = int(np.sum(~keep))
    if not np.any(keep):
        raise InputError(f"all {dropped} samples have degenerate field gradients")
    pts = points[keep]
    V = np.asarray(displacement_field(pts), dtype=np.float64)
    y = -np.sum(grads[keep] * V, axis=1)
    fm = FeatureMatrix(model.features(pts), pts)
    if ridge is None:
        ridge = default_ridge(gram_of(fm))
    solution = solve_edit(fm, y, ridge=ridge)
    wall = time.perf_counter() - t0

    edited = model.copy()
    edited.heads[head].weights = edited.heads[head].weights + solution.delta_theta
    return edited, BaselineReport("bs-l-last", wall, steps=1, dropped_samples=dropped)


def gd_bs(
    model: Model,
    head: int,
    displacement_field,
    sampling,
    scope: str = "last",
    steps: int = GD_STEPS,
    lr: float | None = None,
    fd_step: float = FD_STEP,
):
    """Gradient descent on the linearized boundary proxy objective.

    The proxy penalizes the squared mismatch between the induced field change
    f(x) - f0(x) and the linearized target -grad(f0).V at fixed sample points,
    i.e. MSE regression toward t = f0 - grad(f0).V. scope="last" updates the
    head weights only; scope="all" updates the backbone, head weights, and
    biases (the manifold-fracturing regime).
    """
    if scope not in ("last", "all"):
        raise InputError(f"scope must be 'last' or 'all', got {scope!r}")
    if steps < 0:
        raise InputError("steps must be >= 0")
    lr = DEFAULT_LR[f"gd-bs-{scope}"] if lr is None else lr
    points = _points_of(model, head, sampling)
    field_fn = model.field(head)

    t0 = time.perf_counter()
    grads = fd_gradient(field_fn, points, fd_step)
    V = np.asarray(displacement_field(points), dtype=np.float64)
    targets = np.asarray(field_fn(points)) - np.sum(grads * V, axis=1)

    edited = model.copy()
    losses = []
    diverged = False
    done = 0
    if scope == "last":
        H = edited.features(points)
        w = edited.heads[head].weights
        b = edited.heads[head].bias
        n = len(points)
        for step in range(steps):
            err = H @ w + b - targets
            losses.append(float(err @ err) / n)
            if not np.isfinite(losses[-1]):
                diverged = True
                break
            w = w - lr * (2.0 / n) * (H.T @ err)
            done = step + 1
        edited.heads[head].weights = w
    else:
        # single-head view sharing the copy's arrays, so in-place steps update both
        view = Model(
            edited.input_dim,
            edited.hidden_dim,
            edited.depth,
            edited.omega0,
            edited.backbone,
            [edited.heads[head]],
        )
        Y = targets[:, None]
        for step in range(steps):
            loss, backbone_grads, head_grads = loss_and_grads(view, points, Y)
            losses.append(loss)
            if not np.isfinite(loss):
                diverged = True
                break
            for (W, bvec), (dW, db) in zip(view.backbone, backbone_grads):
                W -= lr * dW
                bvec -= lr * db
            view.heads[0].weights -= lr * head_grads[0][0]
            view.heads[0].bias -= lr * head_grads[0][1]
            done = step + 1
    wall = time.perf_counter() - t0
    return edited, BaselineReport(
        f"gd-bs-{scope}", wall, steps=done, diverged=diverged, losses=losses
    )


# ---------------------------------------------------------------------------
# comparison harness
# ---------------------------------------------------------------------------

@dataclass
class EditTask:
    """One edit problem: a model, a target field, and its displacement form."""

    name: str
    model: Model
    head: int
    target_field_fn: object  # callable(points) -> field values
    points: np.ndarray  # shared volume samples for residual methods
    band_points: np.ndarray  # near-surface samples for the BS methods
    target_mesh: Mesh

    def displacement_field(self):
        """V realizing the target to first order: (f - target) * grad f / |grad f|^2."""
        model_field = self.model.field(self.head)
        target_fn = self.target_field_fn

        def V(pts):
            grads = fd_gradient(model_field, pts)
            delta = np.asarray(target_fn(pts)) - np.asarray(model_field(pts))
            denom = np.maximum(np.sum(grads * grads, axis=1), DEGENERATE_GRAD**2)
            return grads * (delta / denom)[:, None]

        return V


METHODS = ("genie", "bs-l-last", "gd-sdf-last", "gd-bs-last", "gd-bs-all")


def run_comparison(
    tasks,
    methods=METHODS,
    seeds=(0,),
    gd_steps: int = GD_STEPS,
    mesh_resolution: int = 64,
    metric_samples: int = 20000,
    csv_path=None,
    lrs: dict | None = None,
):
    """Run every method on every task; returns BaselineReports and optional CSV.

    Wall time covers each method's edit phase only. CD/HD compare the edited
    head's mesh against the task's target mesh; a method failure becomes a
    NaN row and the run continues. CSV columns:
    method,task,seed,time_s,cd,hd,steps.
    """
    lrs = dict(DEFAULT_LR, **(lrs or {}))
    reports = []
    rows = []
    for task in tasks:
        target_pts = sample_surface(
            task.target_mesh, metric_samples, seed=zlib.crc32(task.name.encode())
        )
        for seed in seeds:
            for method in methods:
                try:
                    edited, report = _dispatch(task, method, gd_steps, lrs)
                    mesh = marching_cubes(
                        edited.field(task.head), (-1.0, 1.0), mesh_resolution
                    )
                    pts = sample_surface(mesh, metric_samples, seed=seed)
                    metric = chamfer_hausdorff(pts, target_pts)
                    report.cd = metric.cd
                    report.hd = metric.hd
                except Exception:
                    report = BaselineReport(method, float("nan"), steps=0)
                reports.append(report)
                rows.append(
                    (
                        method,
                        task.name,
                        seed,
                        report.wall_time,
                        report.cd,
                        report.hd,
                        report.steps,
                    )
                )
    if csv_path is not None:
        with open(csv_path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["method", "task", "seed", "time_s", "cd", "hd", "steps"])
            for row in rows:
                writer.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return reports


def _dispatch(task: EditTask, method: str, gd_steps: int, lrs: dict):
    if method == "genie":
        return genie_edit(task.model, task.head, task.target_field_fn, task.points)
    if method == "gd-sdf-last":
        return gd_sdf_last(
            task.model, task.head, task.target_field_fn, task.points,
            steps=gd_steps, lr=lrs["gd-sdf-last"],
        )
    if method == "bs-l-last":
        return bs_linearized_last(
            task.model, task.head, task.displacement_field(), task.band_points
        )
    if method == "gd-bs-last":
        return gd_bs(
            task.model, task.head, task.displacement_field(), task.band_points,
            scope="last", steps=gd_steps, lr=lrs["gd-bs-last"],
        )
    if method == "gd-bs-all":
        return gd_bs(
            task.model, task.head, task.displacement_field(), task.band_points,
            scope="all", steps=gd_steps, lr=lrs["gd-bs-all"],
        )
    raise InputError(f"unknown method {method!r}")
