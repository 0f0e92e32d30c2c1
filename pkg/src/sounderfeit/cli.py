"""Command-line entry point wiring the pipeline end to end.

Exit codes: 0 success, 2 usage error, 3 data/format error, 4 numeric
divergence.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time

from . import adversarial, dataset, evalsuite, synthengine
from .waveguide import ModelBlowupError, ConfigurationError


def _add_gen_data(sub):
    p = sub.add_parser("gen-data", help="build a corpus file")
    p.add_argument("--kind", required=True, choices=sorted(dataset.KIND_CODES))
    p.add_argument("--grid-step", type=int, default=None,
                   help="bowed1: grid step over the 0-128 control range")
    p.add_argument("--count", type=int, default=None,
                   help="bowed2: number of windows")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)


def _add_train(sub):
    p = sub.add_parser("train", help="train one experiment condition")
    p.add_argument("--corpus", required=True)
    p.add_argument("--condition", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--batches", type=int, default=4000)
    p.add_argument("--lambda", dest="lam", type=float,
                   default=adversarial.DEFAULT_LAMBDA)
    p.add_argument("--batch-size", type=int, default=50)
    p.add_argument("--lr-ae", type=float, default=0.005)
    p.add_argument("--lr-g", type=float, default=0.05)
    p.add_argument("--lr-d", type=float, default=0.05)


def _add_eval(sub):
    p = sub.add_parser("eval", help="emit evaluation CSVs and SVGs")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--grid-steps", type=int, default=8)


def _add_synth(sub):
    p = sub.add_parser("synth", help="render a control script to WAV")
    p.add_argument("--model", required=True)
    p.add_argument("--script", required=True,
                   help="controls.csv: header t,y0,...,z0,...; "
                        "rows are linear-interpolation breakpoints")
    p.add_argument("--out", required=True)
    p.add_argument("--duration", type=float, default=None,
                   help="seconds (default: last breakpoint time)")


def _add_serve(sub):
    p = sub.add_parser("serve", help="run the HTTP/WebSocket service")
    p.add_argument("--model", required=True)
    p.add_argument("--port", type=int,
                   default=int(os.environ.get("SOUNDERFEIT_PORT", 8765)))
    p.add_argument("--static-dir", default=None)
    p.add_argument("--host", default="127.0.0.1")


def build_parser():
    parser = argparse.ArgumentParser(prog="sounderfeit")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_gen_data(sub)
    _add_train(sub)
    _add_eval(sub)
    _add_synth(sub)
    _add_serve(sub)
    return parser


def _cmd_gen_data(args, parser):
    if args.kind == "bowed1":
        if args.grid_step is None:
            parser.error("gen-data --kind bowed1 requires --grid-step")
        corpus = dataset.build_bowed1(grid_step=args.grid_step,
                                      seed=args.seed)
    else:
        if args.count is None:
            parser.error("gen-data --kind bowed2 requires --count")
        corpus = dataset.build_bowed2(args.count, seed=args.seed)
    dataset.save_corpus(corpus, args.out)
    print(f"wrote {args.out}: {len(corpus)} windows ({args.kind})")
    return 0


def _cmd_train(args, parser):
    if args.condition not in adversarial.CONDITIONS:
        parser.error(
            f"unknown condition {args.condition!r}; valid: "
            + ", ".join(adversarial.CONDITIONS))
    corpus = dataset.load_corpus(args.corpus)
    config = adversarial.TrainConfig(
        batch_size=args.batch_size, n_batches=args.batches,
        lr_ae=args.lr_ae, lr_g=args.lr_g, lr_d=args.lr_d,
        lam=args.lam, seed=args.seed)

    def progress(batch, rep):
        print(f"batch {batch}: L_AE={rep.l_ae:.6f} "
              f"L_G={rep.l_g:.6f} L_D={rep.l_d:.6f}")

    model, _ = adversarial.train(corpus, args.condition, config,
                                 progress=progress)
    adversarial.save_model(model, args.out)
    mse = adversarial.holdout_mse(model, corpus)
    print(f"wrote {args.out}: holdout MSE {mse:.6f}")
    return 0


def _cmd_eval(args, parser):
    del parser
    model = adversarial.load_model(args.model)
    corpus = dataset.load_corpus(args.corpus)
    os.makedirs(args.out_dir, exist_ok=True)

    def path(name):
        return os.path.join(args.out_dir, name)

    if model.n_cond >= 1:
        traj = evalsuite.make_test_trajectory(corpus)
        rep = evalsuite.eval_param_estimation(model, traj)
        evalsuite.write_trajectory_csv(path("trajectory.csv"), traj,
                                       rep.estimates)
        evalsuite.write_trajectory_svg(path("trajectory.svg"), traj,
                                       rep.estimates)
        print(f"trajectory RMS error: {rep.rms_param_error:.4f} raw units")
        y_grid, z_grid = evalsuite.default_condition_grid(
            model, steps=args.grid_steps)
        waveforms = evalsuite.render_decoder_grid(model, y_grid, z_grid)
        evalsuite.write_grid_csv(path("grid.csv"), y_grid, z_grid, waveforms)
        evalsuite.write_grid_svg(path("grid.svg"), y_grid, waveforms)
    if model.n_latent >= 1:
        points, ks, corr = evalsuite.latent_scatter(model, corpus)
        evalsuite.write_scatter_csv(path("scatter.csv"), points)
        evalsuite.write_scatter_svg(path("scatter.svg"), points)
        ks_txt = ", ".join(f"{v:.4f}" for v in ks)
        print(f"latent KS vs U(-1,1): {ks_txt}")
    mse = adversarial.holdout_mse(model, corpus)
    print(f"holdout MSE: {mse:.6f}")
    return 0


def _read_controls(path):
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or not rows[0] or rows[0][0].strip() != "t":
        raise dataset.FormatError(
            f"{path}: expected header t,y0,...,z0,...")
    try:
        return synthengine.ControlCurve.from_rows(rows[1:])
    except ValueError as e:
        raise dataset.FormatError(f"{path}: {e}") from e


def _cmd_synth(args, parser):
    del parser
    model = adversarial.load_model(args.model)
    curve = _read_controls(args.script)
    duration = args.duration
    if duration is None:
        duration = float(curve.times[-1])
    if duration <= 0:
        raise dataset.FormatError(
            "script duration is zero; give --duration or a final "
            "breakpoint at t > 0")
    t0 = time.perf_counter()
    samples = synthengine.render_wav(model, curve, duration, args.out)
    elapsed = time.perf_counter() - t0
    rtf = (len(samples) / synthengine.SAMPLE_RATE) / elapsed
    print(f"wrote {args.out}: {len(samples)} samples, RTF {rtf:.2f}")
    return 0


def _cmd_serve(args, parser):
    del parser
    from .service import serve
    serve(args.model, port=args.port, static_dir=args.static_dir,
          host=args.host)
    return 0


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "synth": _cmd_synth,
    "serve": _cmd_serve,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args, parser)
    except (dataset.FormatError, dataset.CorpusError, adversarial.FormatError,
            ConfigurationError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (adversarial.TrainingDivergenceError, ModelBlowupError) as e:
        print(f"numeric divergence: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
