"""Analytic signed distance fields, deformation fields, and point sampling.

All geometry lives in the cube [-1, 1]^3. SDFs are negative inside. Sphere,
torus, cylinder, and sheet are exact distances; the ellipsoid uses the usual
first-order approximation and the double torus a smooth-min union, so those
two are Lipschitz only up to a documented slack (see tests).

Deformation fields g(x) are bounded by 1 in magnitude before scaling by the
amplitude; a deformed supervision target is sdf(x) + eps * g(x), which moves
the surface along its normals by roughly eps * g / |grad sdf|.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, ParseError, SamplingStarvedError

# ---------------------------------------------------------------------------
# analytic shapes
# ---------------------------------------------------------------------------

SHAPE_DEFAULTS = {
    "sphere": {"r": 0.5},
    "ellipsoid": {"a": 0.6, "b": 0.45, "c": 0.35},
    "torus": {"R": 0.5, "r": 0.2},
    "cylinder": {"r": 0.35, "h": 0.5},
    "sheet": {"hx": 0.6, "hy": 0.6, "hz": 0.08},
    "double-torus": {"R": 0.3, "r": 0.12, "cx": 0.3, "k": 0.05},
}


@dataclass(frozen=True)
class AnalyticShape:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SHAPE_DEFAULTS:
            raise InputError(f"unknown shape kind {self.kind!r}")
        merged = dict(SHAPE_DEFAULTS[self.kind])
        merged.update(self.params)
        object.__setattr__(self, "params", merged)

    def sdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        p = x[None, :] if single else x
        d = _SDF_FNS[self.kind](p, self.params)
        return float(d[0]) if single else d


def sdf(shape: AnalyticShape, x):
    return shape.sdf(x)


def _sdf_sphere(p, prm):
    return np.linalg.norm(p, axis=-1) - prm["r"]


def _sdf_ellipsoid(p, prm):
    radii = np.array([prm["a"], prm["b"], prm["c"]])
    k0 = np.linalg.norm(p / radii, axis=-1)
    k1 = np.linalg.norm(p / (radii**2), axis=-1)
    out = np.where(k1 > 0, k0 * (k0 - 1.0) / np.where(k1 > 0, k1, 1.0), -radii.min())
    return out


def _sdf_torus(p, prm):
    rho = np.hypot(p[..., 0], p[..., 1])
    return np.hypot(rho - prm["R"], p[..., 2]) - prm["r"]


def _sdf_cylinder(p, prm):
    dr = np.hypot(p[..., 0], p[..., 1]) - prm["r"]
    dz = np.abs(p[..., 2]) - prm["h"]
    outside = np.hypot(np.maximum(dr, 0.0), np.maximum(dz, 0.0))
    inside = np.minimum(np.maximum(dr, dz), 0.0)
    return outside + inside


def _sdf_sheet(p, prm):
    half = np.array([prm["hx"], prm["hy"], prm["hz"]])
    q = np.abs(p) - half
    outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
    inside = np.minimum(q.max(axis=-1), 0.0)
    return outside + inside


def _smooth_min(d1, d2, k):
    h = np.maximum(k - np.abs(d1 - d2), 0.0)
    return np.minimum(d1, d2) - h * h * 0.25 / k


def _sdf_double_torus(p, prm):
    off = np.zeros(3)
    off[0] = prm["cx"]
    sub = dict(prm, R=prm["R"], r=prm["r"])
    d1 = _sdf_torus(p - off, sub)
    d2 = _sdf_torus(p + off, sub)
    return _smooth_min(d1, d2, prm["k"])


_SDF_FNS = {
    "sphere": _sdf_sphere,
    "ellipsoid": _sdf_ellipsoid,
    "torus": _sdf_torus,
    "cylinder": _sdf_cylinder,
    "sheet": _sdf_sheet,
    "double-torus": _sdf_double_torus,
}


# ---------------------------------------------------------------------------
# deformation fields
# ---------------------------------------------------------------------------

# sup over the unit sphere of the Cartesian harmonic polynomials below;
# dividing by these keeps every mode within [-1, 1].
_SH_SUP = {
    (0, 0): 1.0,
    (1, -1): 1.0,
    (1, 0): 1.0,
    (1, 1): 1.0,
    (2, -2): 0.5,
    (2, -1): 0.5,
    (2, 0): 2.0,
    (2, 1): 0.5,
    (2, 2): 1.0,
    (3, -3): 1.0,
    (3, -2): 1.0 / (3.0 * np.sqrt(3.0)),
    (3, -1): 16.0 / (3.0 * np.sqrt(15.0)),
    (3, 0): 2.0,
    (3, 1): 16.0 / (3.0 * np.sqrt(15.0)),
    (3, 2): 2.0 / (3.0 * np.sqrt(3.0)),
    (3, 3): 1.0,
}


def _sh_poly(l, m, nx, ny, nz):
    if l == 0:
        return np.ones_like(nx)
    if l == 1:
        return {-1: ny, 0: nz, 1: nx}[m]
    if l == 2:
        return {
            -2: nx * ny,
            -1: ny * nz,
            0: 3.0 * nz**2 - 1.0,
            1: nx * nz,
            2: nx**2 - ny**2,
        }[m]
    if l == 3:
        return {
            -3: ny * (3.0 * nx**2 - ny**2),
            -2: nx * ny * nz,
            -1: ny * (5.0 * nz**2 - 1.0),
            0: 5.0 * nz**3 - 3.0 * nz,
            1: nx * (5.0 * nz**2 - 1.0),
            2: nz * (nx**2 - ny**2),
            3: nx * (nx**2 - 3.0 * ny**2),
        }[m]
    raise InputError(f"spherical harmonics implemented for l <= 3, got l={l}")


def _eval_sh(p, prm):
    l, m = int(prm["l"]), int(prm["m"])
    if (l, m) not in _SH_SUP:
        raise InputError(f"invalid spherical harmonic order (l={l}, m={m})")
    r = np.linalg.norm(p, axis=-1)
    safe = np.where(r > 0, r, 1.0)
    n = p / safe[..., None]
    vals = _sh_poly(l, m, n[..., 0], n[..., 1], n[..., 2]) / _SH_SUP[(l, m)]
    return np.where(r > 0, vals, 0.0)


def _eval_torus_trig(p, prm):
    u = np.arctan2(p[..., 1], p[..., 0])
    rho = np.hypot(p[..., 0], p[..., 1])
    v = np.arctan2(p[..., 2], rho - prm.get("R", 0.5))
    return np.cos(prm["p"] * u) * np.cos(prm["q"] * v)


def _cyl_angle(p):
    return np.arctan2(p[..., 1], p[..., 0])


def _eval_cylinder_trig(p, prm):
    return np.cos(prm["p"] * _cyl_angle(p)) * np.cos(prm["q"] * np.pi * p[..., 2])


def _eval_breathing(p, prm):
    return -np.ones(p.shape[:-1])


def _eval_twist(p, prm):
    # stand-in twisting pattern: traveling angular phase along the axis
    return np.sin(prm["p"] * _cyl_angle(p) + prm["q"] * np.pi * p[..., 2])


DEFORM_DEFAULTS = {
    "spherical-harmonic": {"l": 2, "m": 0},
    "torus-trig": {"p": 2, "q": 0, "R": 0.5},
    "cylinder-trig": {"p": 2, "q": 1},
    "breathing": {},
    "ovalization": {"p": 2, "q": 0},
    "axial-bulge": {"p": 0, "q": 1},
    "corrugation": {"p": 4, "q": 2},
    "twist-like": {"p": 2, "q": 1},
}

_DEFORM_FNS = {
    "spherical-harmonic": _eval_sh,
    "torus-trig": _eval_torus_trig,
    "cylinder-trig": _eval_cylinder_trig,
    "breathing": _eval_breathing,
    "ovalization": _eval_cylinder_trig,
    "axial-bulge": _eval_cylinder_trig,
    "corrugation": _eval_cylinder_trig,
    "twist-like": _eval_twist,
}


@dataclass(frozen=True)
class DeformationField:
    kind: str
    params: dict = field(default_factory=dict)
    amplitude: float = 0.05  # default eps for catalog entries

    def __post_init__(self):
        if self.kind not in DEFORM_DEFAULTS:
            raise InputError(f"unknown deformation kind {self.kind!r}")
        merged = dict(DEFORM_DEFAULTS[self.kind])
        merged.update(self.params)
        object.__setattr__(self, "params", merged)

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        p = x[None, :] if single else x
        vals = _DEFORM_FNS[self.kind](p, self.params)
        return float(vals[0]) if single else vals


def deformed_target(shape: AnalyticShape, field_g: DeformationField, eps: float, x):
    """Per-head supervision value: base SDF plus eps-scaled deformation."""
    return sdf(shape, x) + eps * field_g(x)


def deformed_field_fn(shape: AnalyticShape, field_g: DeformationField, eps: float):
    def f(points):
        return deformed_target(shape, field_g, eps, points)

    return f


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SamplingSpec:
    mode: str  # "volume" | "band"
    n_points: int
    seed: int
    bounds: tuple = (-1.0, 1.0)
    width: float = 0.0

    def __post_init__(self):
        if self.mode not in ("volume", "band"):
            raise InputError(f"unknown sampling mode {self.mode!r}")
        if self.n_points < 1:
            raise InputError("n_points must be >= 1")


def _box(bounds):
    lo, hi = bounds
    lo = np.broadcast_to(np.asarray(lo, dtype=np.float64), (3,))
    hi = np.broadcast_to(np.asarray(hi, dtype=np.float64), (3,))
    return lo, hi


def sample(spec: SamplingSpec, sdf_fn=None, attempt_budget: int | None = None):
    points, _ = sample_with_stats(spec, sdf_fn, attempt_budget)
    return points


def sample_with_stats(spec: SamplingSpec, sdf_fn=None, attempt_budget: int | None = None):
    """Draw spec.n_points points; also returns how many uniform proposals were used.

    Volume mode draws i.i.d. uniform in the bounds. Band mode rejects uniform
    proposals until |sdf| <= width, raising SamplingStarvedError once the
    attempt budget (default 1000 x n_points) is spent.
    """
    rng = np.random.default_rng(spec.seed)
    lo, hi = _box(spec.bounds)
    if spec.mode == "volume":
        pts = rng.uniform(lo, hi, size=(spec.n_points, 3))
        return pts, spec.n_points

    if spec.width <= 0:
        raise InputError("band sampling requires width > 0")
    if sdf_fn is None:
        raise InputError("band sampling requires an sdf function")
    budget = 1000 * spec.n_points if attempt_budget is None else int(attempt_budget)
    kept = []
    n_kept = 0
    attempts = 0
    while n_kept < spec.n_points:
        if attempts >= budget:
            raise SamplingStarvedError(
                f"band sampling got {n_kept}/{spec.n_points} points "
                f"after {attempts} proposals (width={spec.width})"
            )
        chunk = min(max(spec.n_points, 1024), budget - attempts)
        cand = rng.uniform(lo, hi, size=(chunk, 3))
        attempts += chunk
        vals = np.asarray(sdf_fn(cand))
        accept = cand[np.abs(vals) <= spec.width]
        if accept.size:
            kept.append(accept)
            n_kept += accept.shape[0]
    pts = np.concatenate(kept)[: spec.n_points]
    return pts, attempts


# ---------------------------------------------------------------------------
# SDF point cloud files: one `x y z sdf` row per line, '#' comments allowed
# ---------------------------------------------------------------------------

def load_sdf_pointcloud(path):
    points, values = [], []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            cols = line.split()
            if len(cols) != 4:
                raise ParseError(f"expected 4 columns, got {len(cols)}", lineno)
            try:
                nums = [float(c) for c in cols]
            except ValueError:
                raise ParseError(f"non-numeric value in {cols!r}", lineno) from None
            points.append(nums[:3])
            values.append(nums[3])
    return np.asarray(points, dtype=np.float64).reshape(-1, 3), np.asarray(values)


def save_sdf_pointcloud(path, points, values):
    points = np.asarray(points, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if points.shape[0] != values.shape[0]:
        raise InputError("points and values must have matching lengths")
    with open(path, "w", encoding="utf-8") as f:
        f.write("# x y z sdf\n")
        for (x, y, z), v in zip(points, values):
            f.write(f"{float(x)!r} {float(y)!r} {float(z)!r} {float(v)!r}\n")


# ---------------------------------------------------------------------------
# string catalogs, e.g. "torus:R=0.5,r=0.2" and "sh:2,0:eps=0.05"
# ---------------------------------------------------------------------------

_DEFORM_ALIASES = {
    "sh": "spherical-harmonic",
    "spherical-harmonic": "spherical-harmonic",
    "torus-trig": "torus-trig",
    "cylinder-trig": "cylinder-trig",
    "breathing": "breathing",
    "ovalization": "ovalization",
    "axial-bulge": "axial-bulge",
    "corrugation": "corrugation",
    "twist": "twist-like",
    "twist-like": "twist-like",
}

_POSITIONAL = {"spherical-harmonic": ("l", "m"), "torus-trig": ("p", "q"),
               "cylinder-trig": ("p", "q"), "corrugation": ("p", "q"),
               "twist-like": ("p", "q")}


def _parse_sections(text):
    name, *sections = text.strip().split(":")
    pos, kw = [], {}
    for section in sections:
        for item in section.split(","):
            item = item.strip()
            if not item:
                continue
            if "=" in item:
                key, val = item.split("=", 1)
                kw[key.strip()] = float(val)
            else:
                pos.append(float(item))
    return name.strip(), pos, kw


def parse_shape(text: str) -> AnalyticShape:
    name, pos, kw = _parse_sections(text)
    if name not in SHAPE_DEFAULTS:
        raise InputError(f"unknown shape {name!r} in {text!r}")
    if pos:
        raise InputError(f"shape parameters must be key=value, got {pos} in {text!r}")
    return AnalyticShape(name, kw)


def parse_deformation(text: str) -> DeformationField:
    name, pos, kw = _parse_sections(text)
    kind = _DEFORM_ALIASES.get(name)
    if kind is None:
        raise InputError(f"unknown deformation {name!r} in {text!r}")
    params = {}
    if pos:
        slots = _POSITIONAL.get(kind, ())
        if len(pos) > len(slots):
            raise InputError(f"too many positional parameters in {text!r}")
        params.update({k: v for k, v in zip(slots, pos)})
    eps = kw.pop("eps", None)
    params.update(kw)
    if eps is None:
        return DeformationField(kind, params)
    return DeformationField(kind, params, amplitude=float(eps))
