"""Training of the sinusoidal network by hand-derived backprop and Adam.

The architecture never varies, so gradients are written out layer by layer
instead of going through an autodiff engine; exactness is checked against
central finite differences in the test suite. Loss is the unweighted sum of
per-head mean squared errors over the batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, TrainingDivergedError
from .model import Model

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class TrainConfig:
    epochs: int = 2000
    batch_size: int = 40960
    learning_rate: float = 1e-4
    seed: int = 0
    n_train_points: int = 10000  # used by dataset builders, not by train() itself


def as_dataset(dataset, n_heads: int):
    """Normalize a dataset to (points (N,d), targets (N,n_heads)) float64 arrays.

    Accepts either the array pair directly or a list of (point, targets) rows.
    """
    if isinstance(dataset, tuple) and len(dataset) == 2:
        X = np.asarray(dataset[0], dtype=np.float64)
        Y = np.asarray(dataset[1], dtype=np.float64)
    else:
        X = np.asarray([row[0] for row in dataset], dtype=np.float64)
        Y = np.asarray([np.atleast_1d(row[1]) for row in dataset], dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise InputError(f"inconsistent dataset shapes {X.shape} / {Y.shape}")
    if Y.shape[1] != n_heads:
        raise InputError(
            f"dataset supplies {Y.shape[1]} targets per point but the model has {n_heads} heads"
        )
    return X, Y


def loss_and_grads(model: Model, X: np.ndarray, Y: np.ndarray):
    """Summed-over-heads MSE and its exact gradients.

    Returns (loss, backbone_grads, head_grads) where backbone_grads is a list
    of (dW, db) matching model.backbone and head_grads a list of (dw, dbias).
    """
    omega = model.omega0
    a = X
    coss = []   # cos(omega * z) per layer, reused by the backward pass
    acts = [X]  # layer inputs (a_0 .. a_{L-1}) plus final features
    for W, b in model.backbone:
        z = omega * (a @ W + b)
        a = np.sin(z)
        coss.append(np.cos(z))
        acts.append(a)

    h = acts[-1]
    Wh = np.stack([head.weights for head in model.heads])  # (n_heads, D)
    bh = np.array([head.bias for head in model.heads])
    preds = h @ Wh.T + bh  # (B, n_heads)
    err = preds - Y
    batch = X.shape[0]
    loss = float(np.sum(np.mean(err**2, axis=0)))

    dpred = (2.0 / batch) * err
    head_grads = [(dpred[:, k] @ h, float(dpred[:, k].sum())) for k in range(len(model.heads))]

    da = dpred @ Wh  # (B, D)
    backbone_grads = [None] * len(model.backbone)
    for layer in range(len(model.backbone) - 1, -1, -1):
        W, _ = model.backbone[layer]
        dz = da * (omega * coss[layer])
        dW = acts[layer].T @ dz
        db = dz.sum(axis=0)
        backbone_grads[layer] = (dW, db)
        if layer > 0:
            da = dz @ W.T
    return loss, backbone_grads, head_grads


class _Adam:
    def __init__(self, shapes, lr):
        self.lr = lr
        self.t = 0
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - ADAM_BETA1**self.t
        c2 = 1.0 - ADAM_BETA2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= ADAM_BETA1
            m += (1 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1 - ADAM_BETA2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)


def _flatten_params(model: Model):
    params = []
    for W, b in model.backbone:
        params.extend([W, b])
    for head in model.heads:
        params.append(head.weights)
    return params


def train(model: Model, dataset, config: TrainConfig):
    """Train a copy of the model; returns (trained model, per-epoch loss history).

    Deterministic given config.seed (shuffling) and the dataset. Head biases
    are trained as well (scalar parameters handled outside the Adam arrays for
    simplicity). Raises TrainingDivergedError when the epoch loss goes
    non-finite.
    """
    X, Y = as_dataset(dataset, len(model.heads))
    m = model.copy()
    rng = np.random.default_rng(config.seed)
    n = X.shape[0]
    batch = max(1, min(config.batch_size, n))

    params = _flatten_params(m)
    adam = _Adam([p.shape for p in params], config.learning_rate)
    bias_adam = _Adam([(1,) for _ in m.heads], config.learning_rate)
    biases = [np.array([h.bias]) for h in m.heads]

    history = []
    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, batch):
            idx = perm[start : start + batch]
            loss, backbone_grads, head_grads = loss_and_grads(m, X[idx], Y[idx])
            epoch_loss += loss * len(idx)
            grads = []
            for dW, db in backbone_grads:
                grads.extend([dW, db])
            grads.extend([dw for dw, _ in head_grads])
            adam.step(params, grads)
            bias_adam.step(biases, [np.array([dbias]) for _, dbias in head_grads])
            for head, bval in zip(m.heads, biases):
                head.bias = float(bval[0])
        epoch_loss /= n
        history.append(epoch_loss)
        if not np.isfinite(epoch_loss):
            raise TrainingDivergedError(epoch, epoch_loss)
    return m, history
