"""Feature matrices, the Gram operator, its eigenmodes, and sampling stability.

The Gram matrix G = H^T H aggregates second-order feature correlations over
the sampled points. Its eigenvectors are the deformation modes: perturbing a
head along v_k changes the field at the samples by H v_k, with squared energy
exactly lambda_k. Eigendecomposition is done by cyclic Jacobi rotations,
which at D <= a few hundred is cheap and gives high relative accuracy on
small eigenvalues.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericalError
from .geometry import SamplingSpec, sample
from .model import Model

RANK_THRESHOLD = 1e-12  # relative to the largest eigenvalue
_JACOBI_TOL = 1e-12
_MAX_SWEEPS = 100


@dataclass
class FeatureMatrix:
    data: np.ndarray  # (N, D), row i = features at points[i]
    points: np.ndarray  # (N, input_dim)
    sampling: SamplingSpec | None = None

    @property
    def n_points(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass
class GramSpectrum:
    gram: np.ndarray  # (D, D)
    eigenvalues: np.ndarray  # (D,), sorted non-increasing
    eigenvectors: np.ndarray  # (D, D), orthonormal columns

    def rank(self, threshold: float = RANK_THRESHOLD) -> int:
        if self.eigenvalues.size == 0 or self.eigenvalues[0] <= 0:
            return 0
        return int(np.sum(self.eigenvalues > threshold * self.eigenvalues[0]))


def build_feature_matrix(model: Model, points, sampling: SamplingSpec | None = None) -> FeatureMatrix:
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise InputError(f"points must be a non-empty (N, d) array, got shape {points.shape}")
    return FeatureMatrix(model.features(points), points, sampling)


def _matrix(H) -> np.ndarray:
    data = H.data if isinstance(H, FeatureMatrix) else np.asarray(H, dtype=np.float64)
    if data.ndim != 2:
        raise InputError(f"expected a matrix, got shape {data.shape}")
    return data


def gram_of(H) -> np.ndarray:
    """G = H^T H, symmetrized so the floating-point result is exactly symmetric."""
    Hm = _matrix(H)
    G = Hm.T @ Hm
    return 0.5 * (G + G.T)


def eig_sym(G, max_sweeps: int = _MAX_SWEEPS):
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues sorted non-increasing, matrix of orthonormal
    eigenvector columns). Iterates until the off-diagonal Frobenius norm is
    at most 1e-12 times ||G||_F. Sign convention: each eigenvector's
    largest-magnitude entry is positive, making the output deterministic
    (consumers must still treat signs as arbitrary).
    """
    G = np.asarray(G, dtype=np.float64)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise InputError(f"expected a square matrix, got shape {G.shape}")
    n = G.shape[0]
    scale = np.abs(G).max() if n else 0.0
    if n and np.abs(G - G.T).max() > max(1e-8 * scale, 0.0):
        raise InputError("matrix is not symmetric within tolerance")

    A = 0.5 * (G + G.T)
    V = np.eye(n)
    norm_f = np.linalg.norm(A)
    if n == 0 or norm_f == 0.0:
        return np.zeros(n), V
    target = _JACOBI_TOL * norm_f
    skip = target / n

    def off_norm(M):
        # direct sum over off-diagonal entries; the ||M||_F^2 - ||diag||^2
        # shortcut cancels catastrophically near convergence
        mask = ~np.eye(n, dtype=bool)
        return np.sqrt(np.sum(M[mask] ** 2))

    converged = False
    for _ in range(max_sweeps):
        if off_norm(A) <= target:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= skip:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau)) if tau != 0 else 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rp = A[p, :].copy()
                rq = A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                cp = A[:, p].copy()
                cq = A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    if not converged:
        off = off_norm(A)
        if off > target:
            raise NumericalError(
                f"Jacobi sweep budget exhausted (off-diagonal {off:.3e} > {target:.3e})"
            )

    lam = np.diag(A).copy()
    order = np.argsort(-lam, kind="stable")
    lam = lam[order]
    V = V[:, order]
    # deterministic signs
    idx = np.argmax(np.abs(V), axis=0)
    flip = V[idx, np.arange(n)] < 0
    V[:, flip] *= -1.0
    return lam, V


def spectrum_of(source) -> GramSpectrum:
    """GramSpectrum of a FeatureMatrix, or of a (square) Gram matrix directly."""
    if isinstance(source, FeatureMatrix):
        G = gram_of(source)
    else:
        arr = _matrix(source)
        G = arr if arr.shape[0] == arr.shape[1] else gram_of(arr)
    lam, V = eig_sym(G)
    return GramSpectrum(G, lam, V)


def deformation_mode(H, v_k) -> np.ndarray:
    """Field change at the sampled points induced by a unit head perturbation v_k."""
    Hm = _matrix(H)
    v = np.asarray(v_k, dtype=np.float64)
    if v.shape != (Hm.shape[1],):
        raise InputError(f"mode vector must have length {Hm.shape[1]}, got shape {v.shape}")
    return Hm @ v


def subspace_similarity(V_a, V_b, k: int) -> float:
    """Mean squared principal-angle cosine between two top-k eigenspaces.

    Equals (1/k) ||V_a[:, :k]^T V_b[:, :k]||_F^2; 1.0 for identical spans,
    0.0 for orthogonal ones. Invariant to column signs, permutations, and any
    orthogonal mixing within each basis.
    """
    V_a = np.asarray(V_a, dtype=np.float64)
    V_b = np.asarray(V_b, dtype=np.float64)
    if k < 1 or k > V_a.shape[1] or k > V_b.shape[1]:
        raise InputError(f"k={k} exceeds the available columns ({V_a.shape[1]}, {V_b.shape[1]})")
    M = V_a[:, :k].T @ V_b[:, :k]
    return float(np.sum(M**2) / k)


def stability_sweep(
    model: Model,
    sweep_specs,
    reference_spec: SamplingSpec,
    k: int = 10,
    sdf_fn=None,
    head_index: int = 0,
    csv_path=None,
):
    """Top-k eigenspace similarity of each sweep sampling regime to a reference.

    The reference must carry the largest sampling budget in the sweep; give
    it a seed different from the sweep entries so the largest-N comparison is
    across independent draws. Band sampling rejects against the model's own
    head field unless sdf_fn overrides it. Eigenvectors do not depend on
    1/N normalization of the Gram matrix, so none is applied here.

    Returns [(param_label, similarity)] and optionally writes them as a
    `param,similarity` CSV.
    """
    sweep_specs = list(sweep_specs)
    if any(spec.n_points > reference_spec.n_points for spec in sweep_specs):
        raise InputError("reference spec must have the largest sampling budget in the sweep")
    if sdf_fn is None:
        sdf_fn = model.field(head_index)

    def basis(spec: SamplingSpec):
        pts = sample(spec, sdf_fn)
        _, V = eig_sym(gram_of(build_feature_matrix(model, pts, spec)))
        return V

    ref_V = basis(reference_spec)
    rows = []
    for spec in sweep_specs:
        if spec == reference_spec:
            V = ref_V
        else:
            V = basis(spec)
        label = f"{spec.width:g}" if spec.mode == "band" else (
            "volume" if any(s.mode == "band" for s in sweep_specs) else str(spec.n_points)
        )
        rows.append((label, subspace_similarity(ref_V, V, k)))
    if csv_path is not None:
        write_rows_csv(csv_path, ("param", "similarity"), rows)
    return rows


def write_spectrum_csv(path, eigenvalues) -> None:
    write_rows_csv(path, ("k", "lambda"), list(enumerate(np.asarray(eigenvalues))))


def write_rows_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([x if isinstance(x, str) else repr(float(x)) if isinstance(x, float) else x for x in row])
