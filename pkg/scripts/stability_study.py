#!/usr/bin/env python3
"""Sampling-stability study: band-width and sample-count sweeps on a sphere.

Trains a desk-scale single-head sphere model (or reuses --out/model.ckpt),
then runs both eigenspace-stability sweeps against a 60k volumetric
reference and writes stability_band.csv / stability_count.csv.

Usage: python scripts/stability_study.py [--out runs/stability]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from gramedit.cli import cmd_stability, cmd_train


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", type=Path, default=Path("runs/stability"))
    parser.add_argument("--paper-scale", action="store_true",
                        help="use the D=128 depth-8 profile (hours of CPU)")
    args = parser.parse_args()

    ckpt = args.out / "train" / "model.ckpt"
    if not ckpt.exists():
        config = {
            "profile": "paper" if args.paper_scale else "desk",
            "seed": 1,
            "out_dir": str(args.out / "train"),
            "shape": "sphere:r=0.5",
            "deformations": [],
        }
        if not args.paper_scale:
            config["model"] = {"hidden_dim": 64, "depth": 3, "omega0": 10.0}
            config["train"] = {"epochs": 300, "batch_size": 2048,
                               "learning_rate": 2e-3, "seed": 2, "n_train_points": 6000}
        cmd_train(config)

    cmd_stability({
        "checkpoint": str(ckpt),
        "out_dir": str(args.out / "sweeps"),
        "k": 10,
        "reference": {"n_points": 60000, "seed": 999},
        "band_sweep": {"widths": [0.01, 0.05, 0.2], "include_volume": True,
                       "n_points": 20000, "seed": 5},
        "count_sweep": {"counts": [1000, 5000, 20000, 60000], "seed": 5},
    })
    print(f"wrote {args.out / 'sweeps'}/stability_band.csv and stability_count.csv")


if __name__ == "__main__":
    main()
