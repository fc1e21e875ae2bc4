"""Sinusoidal multi-head MLP over 3D coordinates, plus checkpoint I/O.

The network is a stack of sine layers sharing one backbone, with any number
of linear output heads reading the penultimate features. Field value of head
k at x is exactly ``heads[k].weights @ features(x) + heads[k].bias``, so the
output is linear in each head's parameters.

Checkpoint container (documented layout, all little-endian):

    bytes 0..6   magic ``GENIEv1`` (ASCII)
    <4I d>       input_dim, hidden_dim, depth, n_heads, omega0
    per head     <H> label byte length, then UTF-8 label
    float64 payload, in order:
        per hidden layer: W (row-major, shape in x out), then b (out)
        per head: weights (hidden_dim), then bias (1 value)

Head patch files (exported eigenmodes, spare heads) use magic ``GENIEH1``:

    bytes 0..6   magic ``GENIEH1``
    <I H>        hidden_dim, label byte length; UTF-8 label
    <d>          bias
    float64 x hidden_dim   weights
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, FormatError, InputError, VersionError

MAGIC = b"GENIEv1"
PATCH_MAGIC = b"GENIEH1"


@dataclass
class Head:
    weights: np.ndarray  # shape (hidden_dim,)
    bias: float
    label: str = ""

    def copy(self) -> "Head":
        return Head(self.weights.copy(), float(self.bias), self.label)


@dataclass
class Model:
    input_dim: int
    hidden_dim: int
    depth: int
    omega0: float
    # one (W, b) pair per hidden layer; W has shape (fan_in, hidden_dim)
    backbone: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    heads: list[Head] = field(default_factory=list)

    def copy(self) -> "Model":
        return Model(
            self.input_dim,
            self.hidden_dim,
            self.depth,
            self.omega0,
            [(W.copy(), b.copy()) for W, b in self.backbone],
            [h.copy() for h in self.heads],
        )

    def features(self, x) -> np.ndarray:
        """Penultimate feature vector(s): activation after the last sine layer.

        Accepts a single point (input_dim,) or a batch (N, input_dim).
        Independent of the heads.
        """
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        a = x[None, :] if single else x
        if a.ndim != 2 or a.shape[1] != self.input_dim:
            raise InputError(
                f"expected points with {self.input_dim} coordinates, got shape {x.shape}"
            )
        for W, b in self.backbone:
            a = np.sin(self.omega0 * (a @ W + b))
        return a[0] if single else a

    def forward(self, head_index: int, x):
        """Field value(s) of one head: w . h(x) + b."""
        head = self._head(head_index)
        h = self.features(x)
        return h @ head.weights + head.bias

    def field(self, head_index: int):
        """Vectorized callable f(points) for meshing and sampling."""
        self._head(head_index)

        def f(points):
            return self.forward(head_index, points)

        return f

    def _head(self, head_index: int) -> Head:
        if not isinstance(head_index, (int, np.integer)) or not (
            0 <= head_index < len(self.heads)
        ):
            raise InputError(
                f"head index {head_index!r} out of range (model has {len(self.heads)} heads)"
            )
        return self.heads[head_index]

    @property
    def head_labels(self) -> list[str]:
        return [h.label for h in self.heads]


def init_model(
    input_dim: int,
    hidden_dim: int,
    depth: int,
    omega0: float,
    n_heads: int,
    seed: int,
) -> Model:
    """Freshly initialized sinusoidal network, deterministic given seed.

    First layer entries drawn uniform in [-1/input_dim, 1/input_dim]; every
    later layer (and each head) uniform in [-sqrt(6/hidden_dim)/omega0,
    sqrt(6/hidden_dim)/omega0]. Head biases start at zero.
    """
    problems = []
    for name, value in (
        ("input_dim", input_dim),
        ("hidden_dim", hidden_dim),
        ("depth", depth),
        ("n_heads", n_heads),
    ):
        if not isinstance(value, (int, np.integer)) or value < 1:
            problems.append(f"{name} must be an integer >= 1, got {value!r}")
    if not omega0 > 0:
        problems.append(f"omega0 must be positive, got {omega0!r}")
    if problems:
        raise ConfigurationError(problems)

    rng = np.random.default_rng(seed)
    backbone = []
    first_bound = 1.0 / input_dim
    later_bound = np.sqrt(6.0 / hidden_dim) / omega0
    for layer in range(depth):
        fan_in = input_dim if layer == 0 else hidden_dim
        bound = first_bound if layer == 0 else later_bound
        W = rng.uniform(-bound, bound, size=(fan_in, hidden_dim))
        b = rng.uniform(-bound, bound, size=hidden_dim)
        backbone.append((W, b))
    heads = []
    for k in range(n_heads):
        w = rng.uniform(-later_bound, later_bound, size=hidden_dim)
        heads.append(Head(w, 0.0, label=f"head{k}"))
    return Model(int(input_dim), int(hidden_dim), int(depth), float(omega0), backbone, heads)


def features(model: Model, x) -> np.ndarray:
    return model.features(x)


def forward(model: Model, head_index: int, x):
    return model.forward(head_index, x)


# ---------------------------------------------------------------------------
# checkpoint I/O
# ---------------------------------------------------------------------------

def _read_exact(f, n: int, what: str) -> bytes:
    buf = f.read(n)
    if len(buf) != n:
        raise FormatError(f"truncated checkpoint: expected {n} bytes for {what}")
    return buf


def save_model(model: Model, path) -> None:
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(
            struct.pack(
                "<4Id",
                model.input_dim,
                model.hidden_dim,
                model.depth,
                len(model.heads),
                model.omega0,
            )
        )
        for head in model.heads:
            label = head.label.encode("utf-8")
            f.write(struct.pack("<H", len(label)))
            f.write(label)
        for W, b in model.backbone:
            f.write(np.ascontiguousarray(W, dtype="<f8").tobytes())
            f.write(np.asarray(b, dtype="<f8").tobytes())
        for head in model.heads:
            f.write(np.asarray(head.weights, dtype="<f8").tobytes())
            f.write(struct.pack("<d", head.bias))


def load_model(path) -> Model:
    with open(path, "rb") as f:
        magic = f.read(len(MAGIC))
        if magic != MAGIC:
            if magic.startswith(b"GENIE"):
                raise VersionError(f"unsupported checkpoint version tag {magic!r}")
            raise FormatError(f"not a checkpoint file (magic {magic!r})")
        header = _read_exact(f, struct.calcsize("<4Id"), "header")
        input_dim, hidden_dim, depth, n_heads, omega0 = struct.unpack("<4Id", header)
        labels = []
        for k in range(n_heads):
            (n,) = struct.unpack("<H", _read_exact(f, 2, f"label length of head {k}"))
            labels.append(_read_exact(f, n, f"label of head {k}").decode("utf-8"))
        backbone = []
        for layer in range(depth):
            fan_in = input_dim if layer == 0 else hidden_dim
            W = np.frombuffer(
                _read_exact(f, 8 * fan_in * hidden_dim, f"layer {layer} weights"),
                dtype="<f8",
            ).reshape(fan_in, hidden_dim).copy()
            b = np.frombuffer(
                _read_exact(f, 8 * hidden_dim, f"layer {layer} bias"), dtype="<f8"
            ).copy()
            backbone.append((W, b))
        heads = []
        for k in range(n_heads):
            w = np.frombuffer(
                _read_exact(f, 8 * hidden_dim, f"head {k} weights"), dtype="<f8"
            ).copy()
            (bias,) = struct.unpack("<d", _read_exact(f, 8, f"head {k} bias"))
            heads.append(Head(w, bias, labels[k]))
        if f.read(1):
            raise FormatError("trailing bytes after checkpoint payload")
    return Model(input_dim, hidden_dim, depth, omega0, backbone, heads)


# ---------------------------------------------------------------------------
# head patches (exported eigenmodes / spare heads)
# ---------------------------------------------------------------------------

def save_head_patch(path, weights: np.ndarray, bias: float, label: str) -> None:
    weights = np.asarray(weights, dtype="<f8")
    if weights.ndim != 1:
        raise InputError("head patch weights must be a vector")
    encoded = label.encode("utf-8")
    with open(path, "wb") as f:
        f.write(PATCH_MAGIC)
        f.write(struct.pack("<IH", weights.size, len(encoded)))
        f.write(encoded)
        f.write(struct.pack("<d", float(bias)))
        f.write(weights.tobytes())


def load_head_patch(path) -> Head:
    with open(path, "rb") as f:
        magic = f.read(len(PATCH_MAGIC))
        if magic != PATCH_MAGIC:
            if magic.startswith(b"GENIE"):
                raise VersionError(f"unsupported head patch version tag {magic!r}")
            raise FormatError(f"not a head patch file (magic {magic!r})")
        dim, label_len = struct.unpack("<IH", _read_exact(f, 6, "patch header"))
        label = _read_exact(f, label_len, "patch label").decode("utf-8")
        (bias,) = struct.unpack("<d", _read_exact(f, 8, "patch bias"))
        weights = np.frombuffer(_read_exact(f, 8 * dim, "patch weights"), dtype="<f8").copy()
        if f.read(1):
            raise FormatError("trailing bytes after head patch payload")
    return Head(weights, bias, label)


def apply_head_patch(model: Model, head: Head) -> Model:
    """New model with the patch appended as an extra head."""
    if head.weights.size != model.hidden_dim:
        raise InputError(
            f"patch dimension {head.weights.size} != model hidden_dim {model.hidden_dim}"
        )
    out = model.copy()
    out.heads.append(head.copy())
    return out
