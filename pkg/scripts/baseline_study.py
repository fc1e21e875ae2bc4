#!/usr/bin/env python3
"""Editing-method comparison on the standard 6-task analytic suite.

Trains (or loads) the 4-head sphere model, builds six interpolation-style
edit targets from its training deformations, and runs every method through
the comparison harness, printing the per-method averages and writing the
full comparison.csv.

Usage: python scripts/baseline_study.py [--out runs/comparison]
"""

import argparse
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from gramedit.baselines import METHODS, EditTask, run_comparison
from gramedit.geometry import AnalyticShape, SamplingSpec, parse_deformation, sample
from gramedit.mesher import marching_cubes
from gramedit.model import load_model
from lr_grid_search import train_reference


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", type=Path, default=Path("runs/comparison"))
    parser.add_argument("--gd-steps", type=int, default=400)
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    ckpt = args.out / "model.ckpt"
    model = load_model(ckpt) if ckpt.exists() else train_reference(ckpt)

    shape = AnalyticShape("sphere")
    deforms = [parse_deformation(t) for t in ("sh:2,0", "sh:2,2", "sh:3,3")]
    vol_pts = sample(SamplingSpec("volume", 4000, seed=21))
    band_pts = sample(SamplingSpec("band", 2000, seed=22, width=0.05), model.field(0))

    tasks = []
    for gi, g in enumerate(deforms):
        for t in (0.5, 1.0):
            def target_fn(p, g=g, t=t):
                return shape.sdf(p) + t * 0.15 * g(p)

            tasks.append(EditTask(
                name=f"d{gi}_t{t:g}", model=model, head=0,
                target_field_fn=target_fn, points=vol_pts, band_points=band_pts,
                target_mesh=marching_cubes(target_fn, (-1.0, 1.0), 48),
            ))

    reports = run_comparison(
        tasks, gd_steps=args.gd_steps, mesh_resolution=48,
        metric_samples=15000, csv_path=args.out / "comparison.csv",
    )
    agg = defaultdict(list)
    for r in reports:
        agg[r.method].append(r)
    print(f"{'method':12} {'time_s':>10} {'CD':>10} {'HD':>8}")
    for m in METHODS:
        rs = agg[m]
        print(f"{m:12} {np.mean([r.wall_time for r in rs]):10.4f} "
              f"{np.nanmean([r.cd for r in rs]):10.6f} "
              f"{np.nanmean([r.hd for r in rs]):8.4f}")
    print(f"wrote {args.out / 'comparison.csv'}")


if __name__ == "__main__":
    main()
