"""Closed-form one-shot last-layer edits and editability diagnostics.

Editing restricts parameter changes to one head. A target change y at the
sampled points is matched in least squares by delta = (G + ridge I)^-1 H^T y;
with ridge 0 and a rank-deficient Gram matrix the eigendecomposition
pseudoinverse gives the minimum-norm solution. The realized change H delta is
the orthogonal projection of y onto Range(H), and the editability ratio
eta = |H delta|^2 / |y|^2 measures how much of the edit is achievable at all
without touching the backbone.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import DegenerateModeError, InputError, NumericalError
from .geometry import SamplingSpec, sample
from .gram import RANK_THRESHOLD, FeatureMatrix, GramSpectrum, eig_sym, gram_of, spectrum_of
from .model import Head, Model


@dataclass
class EditTarget:
    points: np.ndarray  # (N, d)
    y: np.ndarray  # (N,), desired field values minus current values
    description: str = ""

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.y.shape != (self.points.shape[0],):
            raise InputError(
                f"target length {self.y.shape} does not match {self.points.shape[0]} points"
            )


@dataclass
class EditSolution:
    delta_theta: np.ndarray  # (D,)
    realized: np.ndarray  # (N,), H @ delta_theta
    residual: np.ndarray  # (N,), y - realized
    eta: float
    ridge: float
    solve_time: float = 0.0


def default_ridge(G: np.ndarray) -> float:
    """Default regularization for user-facing edits: 1e-8 * trace(G) / D."""
    G = np.asarray(G)
    return 1e-8 * float(np.trace(G)) / G.shape[0]


def solve_edit(H, y, ridge: float = 0.0, spectrum: GramSpectrum | None = None) -> EditSolution:
    """One-shot least-squares head update for a target change y at the samples.

    ridge > 0 solves the regularized normal equations by Cholesky; ridge 0
    goes through the eigendecomposition pseudoinverse (eigenvalues at or
    below 1e-12 of the largest treated as zero), returning the minimum-norm
    solution. Passing a precomputed spectrum of G skips the decomposition.
    A zero-norm target short-circuits to the identity edit with eta 1.0.
    """
    Hm = H.data if isinstance(H, FeatureMatrix) else np.asarray(H, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if ridge < 0:
        raise InputError(f"ridge must be >= 0, got {ridge}")
    if y.shape != (Hm.shape[0],):
        raise InputError(f"target length {y.shape} does not match {Hm.shape[0]} rows")

    t0 = time.perf_counter()
    norm_y2 = float(y @ y)
    if norm_y2 == 0.0:
        zero = np.zeros(Hm.shape[1])
        return EditSolution(zero, np.zeros_like(y), np.zeros_like(y), 1.0, ridge,
                            time.perf_counter() - t0)

    hty = Hm.T @ y
    if ridge > 0:
        G = spectrum.gram if spectrum is not None else gram_of(Hm)
        try:
            factor = cho_factor(G + ridge * np.eye(G.shape[0]))
            delta = cho_solve(factor, hty)
        except (LinAlgError, ValueError) as exc:
            raise NumericalError(f"SPD factorization failed (ridge={ridge}): {exc}") from exc
        if not np.all(np.isfinite(delta)):
            raise NumericalError("non-finite solution; input is NaN-contaminated")
    else:
        if spectrum is None:
            lam, V = eig_sym(gram_of(Hm))
        else:
            lam, V = spectrum.eigenvalues, spectrum.eigenvectors
        if lam.size and lam[0] > 0:
            keep = lam > RANK_THRESHOLD * lam[0]
            Vk = V[:, keep]
            delta = Vk @ ((Vk.T @ hty) / lam[keep])
        else:
            delta = np.zeros(Hm.shape[1])

    realized = Hm @ delta
    residual = y - realized
    eta = min(float(realized @ realized) / norm_y2, 1.0)  # roundoff can exceed 1
    return EditSolution(delta, realized, residual, eta, ridge, time.perf_counter() - t0)


def editability_ratio(H, y, spectrum: GramSpectrum | None = None) -> float:
    """Fraction of the target's energy inside the realizable span (ridge-0 path)."""
    y = np.asarray(y, dtype=np.float64)
    if float(y @ y) == 0.0:
        raise InputError("editability ratio is undefined for a zero target")
    return solve_edit(H, y, ridge=0.0, spectrum=spectrum).eta


def apply_edit(model: Model, head_index: int, solution: EditSolution) -> Model:
    """New model with the head's weights shifted by the solution; input untouched."""
    head = model._head(head_index)
    if solution.delta_theta.shape != head.weights.shape:
        raise InputError(
            f"solution dimension {solution.delta_theta.shape} does not match "
            f"head dimension {head.weights.shape}"
        )
    out = model.copy()
    out.heads[head_index].weights = head.weights + solution.delta_theta
    return out


def in_span_edit(
    model: Model,
    head_index: int,
    fm: FeatureMatrix,
    coefficients,
    spectrum: GramSpectrum | None = None,
):
    """Edit toward a linear combination of Gram eigenmodes of fm.

    coefficients is a list of (k, alpha_k); every k must sit above the rank
    threshold, otherwise DegenerateModeError. Since the target is built
    inside the realizable span, the reported eta is 1 up to roundoff.
    Returns (EditTarget, EditSolution, edited model).
    """
    if spectrum is None:
        spectrum = spectrum_of(fm)
    lam, V = spectrum.eigenvalues, spectrum.eigenvectors
    direction = np.zeros(fm.dim)
    top = lam[0] if lam.size else 0.0
    parts = []
    for k, alpha in coefficients:
        k = int(k)
        if not 0 <= k < lam.size:
            raise InputError(f"mode index {k} out of range for D={lam.size}")
        if lam[k] <= RANK_THRESHOLD * top:
            raise DegenerateModeError(
                f"mode {k} has eigenvalue {lam[k]:.3e}, below the rank threshold"
            )
        direction += alpha * V[:, k]
        parts.append(f"{alpha:g}*v{k}")
    y = fm.data @ direction
    target = EditTarget(fm.points, y, "+".join(parts) or "empty")
    solution = solve_edit(fm, y, ridge=0.0, spectrum=spectrum)
    return target, solution, apply_edit(model, head_index, solution)


def external_edit(
    model: Model,
    head_index: int,
    target_field_fn,
    sampling,
    ridge: float | None = None,
):
    """Edit toward an externally specified field, sampled at the given points.

    sampling is either a SamplingSpec (band mode rejects against the model's
    own head field) or an (N, 3) array of points. ridge None applies the
    default 1e-8 * trace(G)/D regularization; pass 0.0 for the pure
    pseudoinverse update. Returns (EditSolution, edited model); a target that
    already matches the current field short-circuits to the identity edit.
    """
    if isinstance(sampling, SamplingSpec):
        points = sample(sampling, model.field(head_index))
    else:
        points = np.asarray(sampling, dtype=np.float64)
    fm = FeatureMatrix(model.features(points), points)
    current = fm.data @ model.heads[head_index].weights + model.heads[head_index].bias
    y = np.asarray(target_field_fn(points), dtype=np.float64) - current
    if ridge is None:
        ridge = default_ridge(gram_of(fm))
    solution = solve_edit(fm, y, ridge=ridge)
    return solution, apply_edit(model, head_index, solution)


def blend_heads(model: Model, head_a: int, head_b: int, t: float) -> Model:
    """New model with an appended head interpolating (or extrapolating) two heads.

    Weights and bias are blended affinely: (1-t) * head_a + t * head_b; t may
    lie outside [0, 1]. Because the head is linear, the blended field equals
    the pointwise blend of the two head fields exactly.
    """
    a = model._head(head_a)
    b = model._head(head_b)
    out = model.copy()
    out.heads.append(
        Head(
            (1.0 - t) * a.weights + t * b.weights,
            (1.0 - t) * a.bias + t * b.bias,
            label=f"blend:{head_a}-{head_b}:t={t:g}",
        )
    )
    return out


def blend_heads_by_solve(model: Model, head_a: int, head_b: int, t: float, points):
    """Solve-based interpolation path: edit head_a toward the blended field.

    The bias part of the blend is applied directly (a weight update cannot
    produce a constant offset); the rest goes through the closed-form ridge-0
    solve on sampled field values. Agrees with blend_heads to solver
    tolerance whenever the features at the sample points have full column
    rank. Returns (solution, edited model) with head_a replaced in place.
    """
    a = model._head(head_a)
    b = model._head(head_b)
    points = np.asarray(points, dtype=np.float64)
    fm = FeatureMatrix(model.features(points), points)
    f_a = fm.data @ a.weights + a.bias
    f_b = fm.data @ b.weights + b.bias
    delta_bias = t * (b.bias - a.bias)
    y = ((1.0 - t) * f_a + t * f_b) - delta_bias - f_a
    solution = solve_edit(fm, y, ridge=0.0)
    edited = apply_edit(model, head_a, solution)
    edited.heads[head_a].bias += delta_bias
    return solution, edited
