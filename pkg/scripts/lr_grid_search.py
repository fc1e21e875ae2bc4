#!/usr/bin/env python3
"""Coarse learning-rate grid search for the gradient-descent baselines.

Trains (or loads) the 4-head sphere model, then sweeps each GD method's
learning rate over a log grid on one representative edit task, printing the
400-step final objective. The chosen defaults live in
gramedit.baselines.DEFAULT_LR.

Usage: python scripts/lr_grid_search.py [--checkpoint PATH]
"""

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from gramedit.baselines import EditTask, gd_bs, gd_sdf_last, genie_edit
from gramedit.geometry import AnalyticShape, SamplingSpec, parse_deformation, sample
from gramedit.model import init_model, load_model, save_model
from gramedit.training import TrainConfig, train

GRID = (1e-3, 3e-3, 1e-2, 3e-2, 1e-1)


def train_reference(path: Path):
    shape = AnalyticShape("sphere")
    deforms = [parse_deformation(t) for t in ("sh:2,0", "sh:2,2", "sh:3,3")]
    X = sample(SamplingSpec("volume", 10000, seed=1))
    base = shape.sdf(X)
    Y = np.stack([base] + [base + 0.15 * g(X) for g in deforms], axis=1)
    model = init_model(3, 64, 4, 10.0, 4, seed=1)
    for stage, (epochs, lr) in enumerate(((400, 2e-3), (300, 5e-4), (250, 1.2e-4))):
        model, _ = train(model, (X, Y), TrainConfig(
            epochs=epochs, batch_size=2048, learning_rate=lr, seed=2 + stage))
    save_model(model, path)
    return model


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--checkpoint", type=Path, default=Path("runs/lr_grid/model.ckpt"))
    args = parser.parse_args()

    if args.checkpoint.exists():
        model = load_model(args.checkpoint)
        print(f"loaded {args.checkpoint}")
    else:
        args.checkpoint.parent.mkdir(parents=True, exist_ok=True)
        print("training reference model (a few minutes)")
        model = train_reference(args.checkpoint)

    shape = AnalyticShape("sphere")
    g = parse_deformation("sh:2,2")

    def target_fn(p):
        return shape.sdf(p) + 0.15 * g(p)

    vol_pts = sample(SamplingSpec("volume", 4000, seed=21))
    band_pts = sample(SamplingSpec("band", 2000, seed=22, width=0.05), model.field(0))
    task = EditTask("grid", model, 0, target_fn, vol_pts, band_pts, None)

    _, rep = genie_edit(model, 0, target_fn, vol_pts)
    print(f"genie reference: {rep.wall_time * 1e3:.2f} ms")

    print("\ngd-sdf-last (400 steps):")
    for lr in GRID:
        _, rep = gd_sdf_last(model, 0, target_fn, vol_pts, steps=400, lr=lr)
        status = "DIVERGED" if rep.diverged else f"loss {rep.losses[-1]:.3e}"
        print(f"  lr={lr:<7g} {status}  ({rep.wall_time:.2f}s)")

    V = task.displacement_field()
    for scope in ("last", "all"):
        print(f"\ngd-bs-{scope} (400 steps):")
        for lr in GRID:
            _, rep = gd_bs(model, 0, V, band_pts, scope=scope, steps=400, lr=lr)
            status = "DIVERGED" if rep.diverged else f"proxy {rep.losses[-1]:.3e}"
            print(f"  lr={lr:<7g} {status}  ({rep.wall_time:.2f}s)")


if __name__ == "__main__":
    main()
