"""Configuration-driven experiment runner.

Each subcommand takes a JSON config file plus repeatable --set overrides
(dotted keys, JSON-encoded values) and writes a manifest.json next to its
outputs capturing the fully resolved config; re-running a command on its own
manifest reproduces byte-identical CSVs and checkpoints. The env var
GRAMEDIT_OUT sets the root that relative out_dir paths resolve under.

Subcommands: train, gram, stability, edit, compare, serve, export-mesh.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import platform
import socket
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import baselines as bl
from . import edit as ed
from . import geometry as geo
from . import gram
from . import mesher
from .errors import ConfigurationError, InputError
from .model import init_model, load_model, save_head_patch, save_model
from .training import TrainConfig, train

PROFILES = {
    "desk": {
        "model": {"input_dim": 3, "hidden_dim": 64, "depth": 4, "omega0": 30.0},
        "train": {"epochs": 2000, "batch_size": 2048, "learning_rate": 1e-3,
                  "seed": 0, "n_train_points": 10000},
        "sampling": {"mode": "volume", "n_points": 10000, "seed": 0, "bounds": [-1.0, 1.0]},
    },
    "paper": {
        "model": {"input_dim": 3, "hidden_dim": 128, "depth": 8, "omega0": 30.0},
        "train": {"epochs": 20000, "batch_size": 40960, "learning_rate": 1e-4,
                  "seed": 0, "n_train_points": 60000},
        "sampling": {"mode": "volume", "n_points": 60000, "seed": 0, "bounds": [-1.0, 1.0]},
    },
}


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------

def _deep_merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(path, overrides=(), command: str | None = None) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        config = json.load(f)
    # accept a previously written manifest directly
    if set(config) >= {"command", "config"}:
        if command is not None and config["command"] != command:
            raise ConfigurationError(
                [f"manifest was written by '{config['command']}', not '{command}'"]
            )
        config = config["config"]
    for item in overrides:
        if "=" not in item:
            raise ConfigurationError([f"override {item!r} is not of the form key=value"])
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = config
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    profile = config.pop("profile", None)
    if profile is not None:
        if profile not in PROFILES:
            raise ConfigurationError([f"unknown profile {profile!r}"])
        config = _deep_merge(PROFILES[profile], config)
    return config


def resolve_out_dir(config: dict) -> Path:
    root = Path(os.environ.get("GRAMEDIT_OUT", "."))
    out = Path(config.get("out_dir", "runs/out"))
    out_dir = out if out.is_absolute() else root / out
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def write_manifest(out_dir: Path, command: str, config: dict) -> None:
    manifest = {
        "command": command,
        "config": config,
        "versions": {
            "gramedit": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def _sampling_spec(cfg: dict, default_seed: int = 0) -> geo.SamplingSpec:
    return geo.SamplingSpec(
        mode=cfg.get("mode", "volume"),
        n_points=int(cfg.get("n_points", 10000)),
        seed=int(cfg.get("seed", default_seed)),
        bounds=tuple(cfg.get("bounds", (-1.0, 1.0))),
        width=float(cfg.get("width", 0.0)),
    )


def _write_csv(path, header, rows):
    gram.write_rows_csv(path, header, rows)


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

def _validate_train(config: dict) -> list[str]:
    errors = []
    model_cfg = config.get("model", {})
    for key in ("hidden_dim", "depth"):
        if int(model_cfg.get(key, 1)) < 1:
            errors.append(f"model.{key} must be >= 1")
    if float(model_cfg.get("omega0", 30.0)) <= 0:
        errors.append("model.omega0 must be positive")
    train_cfg = config.get("train", {})
    for key, minimum in (("epochs", 1), ("batch_size", 1), ("n_train_points", 1)):
        if int(train_cfg.get(key, minimum)) < minimum:
            errors.append(f"train.{key} must be >= {minimum}")
    if float(train_cfg.get("learning_rate", 1e-3)) <= 0:
        errors.append("train.learning_rate must be positive")
    deformations = config.get("deformations", [])
    n_heads = config.get("n_heads", 1 + len(deformations))
    if int(n_heads) < 1:
        errors.append("n_heads must be >= 1 (a model needs at least one head)")
    elif int(n_heads) != 1 + len(deformations):
        errors.append(
            f"n_heads={n_heads} inconsistent with {len(deformations)} deformations "
            "(need one extra head per deformation)"
        )
    if "shape" not in config and "dataset" not in config:
        errors.append("config needs a 'shape' catalog string or a 'dataset' point-cloud path")
    if "shape" in config:
        try:
            geo.parse_shape(config["shape"])
        except InputError as exc:
            errors.append(str(exc))
    for text in deformations:
        try:
            geo.parse_deformation(text)
        except InputError as exc:
            errors.append(str(exc))
    try:
        _sampling_spec(config.get("sampling", {}))
    except InputError as exc:
        errors.append(str(exc))
    return errors


def cmd_train(config: dict) -> Path:
    errors = _validate_train(config)
    if errors:
        raise ConfigurationError(errors)
    out_dir = resolve_out_dir(config)

    model_cfg = config.get("model", {})
    train_cfg = config.get("train", {})
    deformations = [geo.parse_deformation(t) for t in config.get("deformations", [])]
    n_heads = 1 + len(deformations)

    tc = TrainConfig(
        epochs=int(train_cfg.get("epochs", 2000)),
        batch_size=int(train_cfg.get("batch_size", 2048)),
        learning_rate=float(train_cfg.get("learning_rate", 1e-3)),
        seed=int(train_cfg.get("seed", config.get("seed", 0))),
        n_train_points=int(train_cfg.get("n_train_points", 10000)),
    )
    sampling = _sampling_spec(
        dict(config.get("sampling", {}), n_points=tc.n_train_points),
        default_seed=int(config.get("seed", 0)),
    )

    if "dataset" in config and config["dataset"]:
        points, values = geo.load_sdf_pointcloud(config["dataset"])
        targets = values[:, None]
        if n_heads != 1:
            raise ConfigurationError(
                ["point-cloud datasets supervise a single head; drop 'deformations'"]
            )
    else:
        shape = geo.parse_shape(config["shape"])
        points = geo.sample(sampling, shape.sdf)
        base = shape.sdf(points)
        columns = [base]
        for field_g in deformations:
            columns.append(base + field_g.amplitude * field_g(points))
        targets = np.stack(columns, axis=1)

    model = init_model(
        int(model_cfg.get("input_dim", 3)),
        int(model_cfg.get("hidden_dim", 64)),
        int(model_cfg.get("depth", 4)),
        float(model_cfg.get("omega0", 30.0)),
        n_heads,
        seed=int(config.get("seed", 0)),
    )
    model.heads[0].label = "base"
    for k, field_g in enumerate(deformations, start=1):
        params = ",".join(f"{key}={val:g}" for key, val in sorted(field_g.params.items()))
        model.heads[k].label = f"deform:{field_g.kind}:{params}:eps={field_g.amplitude:g}"

    trained, history = train(model, (points, targets), tc)
    save_model(trained, out_dir / "model.ckpt")
    _write_csv(out_dir / "loss.csv", ("epoch", "loss"), list(enumerate(history)))
    write_manifest(out_dir, "train", config)
    return out_dir


# ---------------------------------------------------------------------------
# gram / stability
# ---------------------------------------------------------------------------

def cmd_gram(config: dict) -> Path:
    out_dir = resolve_out_dir(config)
    model = load_model(config["checkpoint"])
    head = int(config.get("head", 0))
    sampling = _sampling_spec(config.get("sampling", {}))
    points = geo.sample(sampling, model.field(head))
    fm = gram.build_feature_matrix(model, points, sampling)
    spectrum = gram.spectrum_of(fm)
    gram.write_spectrum_csv(out_dir / "spectrum.csv", spectrum.eigenvalues)

    for k in config.get("export_modes", []):
        save_head_patch(
            out_dir / f"mode{k}.head",
            spectrum.eigenvectors[:, int(k)],
            0.0,
            label=f"mode:{k}",
        )

    mesh_cfg = config.get("mode_mesh")
    if mesh_cfg:
        res = int(mesh_cfg.get("resolution", 64))
        alpha = float(mesh_cfg.get("alpha", 0.05))
        base_mesh = mesher.marching_cubes(model.field(head), (-1.0, 1.0), res)
        mesher.export_mesh(base_mesh, out_dir / "base.obj")
        for k in mesh_cfg.get("modes", []):
            v = spectrum.eigenvectors[:, int(k)]
            for sign, tag in ((alpha, "plus"), (-alpha, "minus")):
                shifted = model.copy()
                shifted.heads[head].weights = shifted.heads[head].weights + sign * v
                mesh = mesher.marching_cubes(shifted.field(head), (-1.0, 1.0), res)
                mesher.export_mesh(mesh, out_dir / f"mode{k}_{tag}.obj")
    write_manifest(out_dir, "gram", config)
    return out_dir


def cmd_stability(config: dict) -> Path:
    out_dir = resolve_out_dir(config)
    model = load_model(config["checkpoint"])
    head = int(config.get("head", 0))
    k = int(config.get("k", 10))
    ref_cfg = config.get("reference", {"n_points": 60000, "seed": 999})
    reference = _sampling_spec(dict(ref_cfg, mode="volume"))

    band_cfg = config.get("band_sweep")
    if band_cfg:
        n = int(band_cfg.get("n_points", 20000))
        seed = int(band_cfg.get("seed", 0))
        specs = [
            geo.SamplingSpec("band", n, seed, width=float(w))
            for w in band_cfg.get("widths", (0.01, 0.05, 0.2))
        ]
        if band_cfg.get("include_volume", True):
            specs.append(geo.SamplingSpec("volume", n, seed))
        gram.stability_sweep(
            model, specs, reference, k=k, head_index=head,
            csv_path=out_dir / "stability_band.csv",
        )

    count_cfg = config.get("count_sweep")
    if count_cfg:
        seed = int(count_cfg.get("seed", 0))
        specs = [
            geo.SamplingSpec("volume", int(n), seed)
            for n in count_cfg.get("counts", (1000, 5000, 20000, 60000))
        ]
        gram.stability_sweep(
            model, specs, reference, k=k, head_index=head,
            csv_path=out_dir / "stability_count.csv",
        )
    write_manifest(out_dir, "stability", config)
    return out_dir


# ---------------------------------------------------------------------------
# edit
# ---------------------------------------------------------------------------

def cmd_edit(config: dict) -> Path:
    out_dir = resolve_out_dir(config)
    model = load_model(config["checkpoint"])
    head = int(config.get("head", 0))
    recipe = config["recipe"]
    res = int(config.get("mesh_resolution", 64))
    n_metric = int(config.get("metric_samples", 20000))
    kind = recipe["type"]

    base_mesh = mesher.marching_cubes(model.field(head), (-1.0, 1.0), res)
    mesher.export_mesh(base_mesh, out_dir / "base.obj")

    target_mesh = None
    solution = None
    solve_basis = None
    if kind == "mode-combo":
        sampling = _sampling_spec(recipe.get("sampling", {}))
        points = geo.sample(sampling, model.field(head))
        fm = gram.build_feature_matrix(model, points, sampling)
        spectrum = gram.spectrum_of(fm)
        coeffs = [(int(k), float(a)) for k, a in recipe["coefficients"]]
        _, solution, edited = ed.in_span_edit(model, head, fm, coeffs, spectrum)
        eta = solution.eta
        solve_basis = spectrum.eigenvectors
        # analytic target field: base field plus the mode combination
        direction = np.zeros(model.hidden_dim)
        for k, a in coeffs:
            direction += a * spectrum.eigenvectors[:, k]

        def target_fn(pts, _d=direction):
            return model.forward(head, pts) + model.features(pts) @ _d

        target_mesh = mesher.marching_cubes(target_fn, (-1.0, 1.0), res)
    elif kind == "external-field":
        shape = geo.parse_shape(recipe["shape"])
        field_g = geo.parse_deformation(recipe["deform"])
        eps = float(recipe.get("eps", field_g.amplitude))
        target_fn = geo.deformed_field_fn(shape, field_g, eps)
        sampling = _sampling_spec(recipe.get("sampling", {}))
        points = geo.sample(sampling, model.field(head))
        ridge = recipe.get("ridge")
        solution, edited = ed.external_edit(
            model, head, target_fn, points, ridge=None if ridge is None else float(ridge)
        )
        fm = gram.build_feature_matrix(model, points)
        y = target_fn(points) - model.forward(head, points)
        eta = ed.editability_ratio(fm, y) if float(y @ y) > 0 else 1.0
        solve_basis = gram.spectrum_of(fm).eigenvectors
        target_mesh = mesher.marching_cubes(target_fn, (-1.0, 1.0), res)
    elif kind == "head-blend":
        a, b, t = int(recipe["a"]), int(recipe["b"]), float(recipe["t"])
        edited = ed.blend_heads(model, a, b, t)
        head = len(edited.heads) - 1
        eta = 1.0
        target_mesh = mesher.marching_cubes(edited.field(head), (-1.0, 1.0), res)
    else:
        raise ConfigurationError([f"unknown edit recipe type {kind!r}"])

    edited_mesh = mesher.marching_cubes(edited.field(head), (-1.0, 1.0), res)
    mesher.export_mesh(edited_mesh, out_dir / "edited.obj")
    if target_mesh is not None:
        mesher.export_mesh(target_mesh, out_dir / "target.obj")
    save_model(edited, out_dir / "edited.ckpt")
    if solution is not None:
        # the update as a loadable head patch and as eigenbasis coefficients
        save_head_patch(out_dir / "delta.head", solution.delta_theta, 0.0,
                        label=f"edit:{kind}")
        coeffs_rows = list(enumerate(solve_basis.T @ solution.delta_theta))
        _write_csv(out_dir / "solution.csv", ("k", "coefficient"), coeffs_rows)

    if edited_mesh.is_empty or target_mesh.is_empty:
        cd = hd = float("nan")
    else:
        metric = mesher.mesh_metrics(edited_mesh, target_mesh, n=n_metric, seed=0)
        cd, hd = metric.cd, metric.hd
    _write_csv(
        out_dir / "metrics.csv",
        ("recipe", "eta", "cd", "hd"),
        [(kind, float(eta), float(cd), float(hd))],
    )
    write_manifest(out_dir, "edit", config)
    return out_dir


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

def cmd_compare(config: dict) -> Path:
    out_dir = resolve_out_dir(config)
    model = load_model(config["checkpoint"])
    head = int(config.get("head", 0))
    res = int(config.get("mesh_resolution", 64))
    sampling = _sampling_spec(config.get("sampling", {"n_points": 4000}))
    band_cfg = config.get(
        "band", {"mode": "band", "n_points": 2000, "seed": 7, "width": 0.05}
    )
    band = _sampling_spec(band_cfg)

    tasks = []
    for entry in config["tasks"]:
        shape = geo.parse_shape(entry["shape"])
        field_g = geo.parse_deformation(entry["deform"])
        eps = float(entry.get("eps", field_g.amplitude))
        target_fn = geo.deformed_field_fn(shape, field_g, eps)
        tasks.append(
            bl.EditTask(
                name=entry.get("name", f"{entry['shape']}|{entry['deform']}|{eps:g}"),
                model=model,
                head=head,
                target_field_fn=target_fn,
                points=geo.sample(sampling, model.field(head)),
                band_points=geo.sample(band, model.field(head)),
                target_mesh=mesher.marching_cubes(target_fn, (-1.0, 1.0), res),
            )
        )
    bl.run_comparison(
        tasks,
        methods=tuple(config.get("methods", bl.METHODS)),
        seeds=tuple(config.get("seeds", (0,))),
        gd_steps=int(config.get("gd_steps", bl.GD_STEPS)),
        mesh_resolution=res,
        metric_samples=int(config.get("metric_samples", 20000)),
        csv_path=out_dir / "comparison.csv",
    )
    write_manifest(out_dir, "compare", config)
    return out_dir


# ---------------------------------------------------------------------------
# serve / export-mesh
# ---------------------------------------------------------------------------

def cmd_serve(config: dict):
    import uvicorn

    from .service import create_app

    host = config.get("host", "127.0.0.1")
    port = int(config.get("port", 8000))
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((host, port))
    except OSError as exc:
        raise ConfigurationError([f"cannot bind {host}:{port}: {exc}"]) from exc
    finally:
        probe.close()

    app = create_app(
        config["checkpoint"],
        sampling=_sampling_spec(config.get("sampling", {"n_points": 20000, "seed": 17})),
        resolution_cap=int(config.get("resolution_cap", 128)),
        ui_dir=config.get("ui_dir"),
    )
    uvicorn.run(app, host=host, port=port, log_level=config.get("log_level", "info"))


def cmd_export_mesh(config: dict) -> Path:
    out_dir = resolve_out_dir(config)
    model = load_model(config["checkpoint"])
    head = int(config.get("head", 0))
    res = int(config.get("resolution", 64))
    bounds = tuple(config.get("bounds", (-1.0, 1.0)))
    mesh = mesher.marching_cubes(model.field(head), bounds, res)
    mesher.export_mesh(mesh, out_dir / config.get("obj_name", "mesh.obj"))
    if config.get("grid_name"):
        mesher.export_field_grid(model.field(head), bounds, res, out_dir / config["grid_name"])
    write_manifest(out_dir, "export-mesh", config)
    return out_dir


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

_COMMANDS = {
    "train": cmd_train,
    "gram": cmd_gram,
    "stability": cmd_stability,
    "edit": cmd_edit,
    "compare": cmd_compare,
    "serve": cmd_serve,
    "export-mesh": cmd_export_mesh,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gramedit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config (or a manifest.json)")
        p.add_argument(
            "--set", action="append", default=[], metavar="KEY=VALUE",
            help="override a config entry (dotted key, JSON value)",
        )
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config, args.set, command=args.command)
        result = _COMMANDS[args.command](config)
    except ConfigurationError as exc:
        for message in exc.messages:
            print(f"config error: {message}", file=sys.stderr)
        return 2
    if result is not None:
        print(result)
    return 0


if __name__ == "__main__":
    sys.exit(main())
