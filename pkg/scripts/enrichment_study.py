#!/usr/bin/env python3
"""Span-enrichment study: single-head vs multi-head editability across shapes.

For each base shape, trains a single-head and a 4-head desk-scale model,
edits both toward each in-training deformation target, and writes a CSV of
editability ratios and Hausdorff distances (the Table-2-style comparison).

Usage: python scripts/enrichment_study.py [--out runs/enrichment]
"""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from gramedit.edit import editability_ratio, external_edit
from gramedit.geometry import AnalyticShape, SamplingSpec, parse_deformation, sample
from gramedit.gram import build_feature_matrix, spectrum_of
from gramedit.mesher import chamfer_hausdorff, marching_cubes, sample_surface
from gramedit.model import init_model
from gramedit.training import TrainConfig, train

SHAPE_DEFORMS = {
    "sphere": ("sh:2,0", "sh:2,2", "sh:3,3"),
    "torus": ("torus-trig:2,0", "torus-trig:0,2", "torus-trig:3,1"),
    "cylinder": ("cylinder-trig:2,0", "cylinder-trig:0,1", "cylinder-trig:3,2"),
    "ellipsoid": ("sh:2,0", "sh:2,1", "sh:3,0"),
}
EPS = 0.12


def train_model(shape, deforms, seed=1):
    X = sample(SamplingSpec("volume", 6000, seed=seed))
    base = shape.sdf(X)
    Y = np.stack([base] + [base + EPS * g(X) for g in deforms], axis=1)
    model = init_model(3, 64, 3, 10.0, 1 + len(deforms), seed=seed)
    model, _ = train(model, (X, Y), TrainConfig(
        epochs=300, batch_size=2048, learning_rate=2e-3, seed=seed + 1))
    return model


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", type=Path, default=Path("runs/enrichment"))
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    pts = sample(SamplingSpec("volume", 4000, seed=77))
    rows = []
    for kind, deform_texts in SHAPE_DEFORMS.items():
        shape = AnalyticShape(kind)
        deforms = [parse_deformation(t) for t in deform_texts]
        single = train_model(shape, [])
        multi = train_model(shape, deforms)
        fm_s, fm_m = build_feature_matrix(single, pts), build_feature_matrix(multi, pts)
        spec_s, spec_m = spectrum_of(fm_s), spectrum_of(fm_m)
        for text, g in zip(deform_texts, deforms):
            def target_fn(p, g=g):
                return shape.sdf(p) + EPS * g(p)

            eta_s = editability_ratio(fm_s, target_fn(pts) - single.forward(0, pts), spec_s)
            eta_m = editability_ratio(fm_m, target_fn(pts) - multi.forward(0, pts), spec_m)
            target_mesh = marching_cubes(target_fn, (-1.0, 1.0), 48)
            tp = sample_surface(target_mesh, 20000, 0)
            hds = []
            for model in (single, multi):
                _, edited = external_edit(model, 0, target_fn, pts)
                mesh = marching_cubes(edited.field(0), (-1.0, 1.0), 48)
                hds.append(chamfer_hausdorff(sample_surface(mesh, 20000, 1), tp).hd)
            rows.append((kind, text, eta_s, eta_m, hds[0], hds[1]))
            print(f"{kind:10} {text:22} eta_s={eta_s:.5f} eta_m={eta_m:.5f} "
                  f"hd_s={hds[0]:.4f} hd_m={hds[1]:.4f}")

    with open(args.out / "enrichment.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["shape", "deformation", "eta_single", "eta_multi",
                         "hd_single", "hd_multi"])
        writer.writerows(rows)
    print(f"wrote {args.out / 'enrichment.csv'}")


if __name__ == "__main__":
    main()
