#!/usr/bin/env python3
"""Run the full six-condition experiment sweep and emit reports.

Builds (or reuses) the two corpora, trains every experiment condition,
saves checkpoints, and writes evaluation CSV/SVG reports plus a summary
table.  Everything is seeded and reproducible.

Usage:
    python3 scripts/run_experiments.py --out-dir runs/ [--seed 1]
        [--grid-step 4] [--bowed2-count 20000] [--conditions D1_Z2_Y ...]
"""

import argparse
import csv
import os
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from sounderfeit import adversarial, dataset, evalsuite  # noqa: E402


def get_corpus(kind, args, cache_dir):
    if kind == "bowed1":
        path = os.path.join(cache_dir, f"bowed1_step{args.grid_step}.snd")
        build = lambda: dataset.build_bowed1(grid_step=args.grid_step)
    else:
        path = os.path.join(
            cache_dir, f"bowed2_{args.bowed2_count}_s{args.seed}.snd")
        build = lambda: dataset.build_bowed2(args.bowed2_count,
                                             seed=args.seed)
    if os.path.exists(path):
        return dataset.load_corpus(path)
    corpus = build()
    dataset.save_corpus(corpus, path)
    return corpus


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", required=True)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--grid-step", type=int, default=4)
    ap.add_argument("--bowed2-count", type=int, default=20000)
    ap.add_argument("--conditions", nargs="*",
                    default=list(adversarial.CONDITIONS))
    args = ap.parse_args(argv)

    os.makedirs(args.out_dir, exist_ok=True)
    corpora = {k: get_corpus(k, args, args.out_dir)
               for k in ("bowed1", "bowed2")}
    trajs = {k: evalsuite.make_test_trajectory(c)
             for k, c in corpora.items()}

    summary = []
    for kind, corpus in corpora.items():
        for name in args.conditions:
            tag = f"{name}_{kind}_s{args.seed}"
            run_dir = os.path.join(args.out_dir, tag)
            os.makedirs(run_dir, exist_ok=True)
            t0 = time.time()
            model, _ = adversarial.train(
                corpus, name, adversarial.TrainConfig(seed=args.seed))
            train_s = time.time() - t0
            adversarial.save_model(model,
                                   os.path.join(run_dir, "model.ckpt"))
            rep = evalsuite.evaluate_model(model, corpus, trajs[kind])
            if model.n_cond >= 1:
                evalsuite.write_trajectory_csv(
                    os.path.join(run_dir, "trajectory.csv"),
                    trajs[kind], rep.estimates)
                evalsuite.write_trajectory_svg(
                    os.path.join(run_dir, "trajectory.svg"),
                    trajs[kind], rep.estimates)
                y_grid, z_grid = evalsuite.default_condition_grid(model)
                wf = evalsuite.render_decoder_grid(model, y_grid, z_grid)
                evalsuite.write_grid_csv(
                    os.path.join(run_dir, "grid.csv"), y_grid, z_grid, wf)
                evalsuite.write_grid_svg(
                    os.path.join(run_dir, "grid.svg"), y_grid, wf)
            if model.n_latent >= 1:
                pts, _, _ = evalsuite.latent_scatter(model, corpus)
                evalsuite.write_scatter_csv(
                    os.path.join(run_dir, "scatter.csv"), pts)
                evalsuite.write_scatter_svg(
                    os.path.join(run_dir, "scatter.svg"), pts)
            ks = (float(np.max(rep.latent_ks))
                  if rep.latent_ks.size else float("nan"))
            summary.append([tag, f"{rep.holdout_mse:.6f}",
                            f"{rep.rms_param_error:.4f}", f"{ks:.4f}",
                            f"{train_s:.1f}"])
            print(f"{tag}: MSE {rep.holdout_mse:.4f} "
                  f"trajRMS {rep.rms_param_error:.2f} ({train_s:.0f}s)")

    with open(os.path.join(args.out_dir, "summary.csv"), "w",
              newline="") as f:
        w = csv.writer(f)
        w.writerow(["run", "holdout_mse", "trajectory_rms", "max_latent_ks",
                    "train_seconds"])
        w.writerows(summary)
    print(f"summary written to {os.path.join(args.out_dir, 'summary.csv')}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
