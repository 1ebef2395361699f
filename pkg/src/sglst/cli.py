"""Command-line entry point: ``sglst track|eval|solve|synth``."""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .evaluation import TrackRun, ope_run, summarize
from .io import RunConfig, load_sequence, parse_boxes, read_instance, write_results
from .solver import SolverConfig, precompute, solve
from .synth import synth_sequence
from .tracker import SGLSTTracker


def _cmd_track(args):
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    overrides = {"seed": args.seed, "features": args.features,
                 "n_particles": args.particles, "n_templates": args.templates}
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    cfg.input = str(args.sequence)
    cfg.output = str(args.out)
    seq = load_sequence(args.sequence)
    if args.max_frames:
        seq.frames = seq.frames[:args.max_frames]
        seq.groundtruth = seq.groundtruth[:args.max_frames]
    tracker = SGLSTTracker(**cfg.tracker_params())
    run, summary = ope_run(seq, tracker)
    write_results(run, args.out, summary, cfg)
    print(f"{seq.name}: mean overlap {summary['mean_overlap']:.4f}, AUC {summary['auc']:.4f}")
    return 0


def _cmd_eval(args):
    results = parse_boxes(args.results)
    gt = parse_boxes(args.groundtruth)
    n = min(len(results), len(gt))
    if len(results) != len(gt):
        logging.warning("results have %d rows, ground truth %d; scoring the first %d",
                        len(results), len(gt), n)
    run = TrackRun(Path(args.results).stem, results[:n], gt[:n])
    summary = summarize(run)
    if args.out:
        write_results(run, args.out, summary)
    print(f"mean overlap {summary['mean_overlap']:.4f}, AUC {summary['auc']:.4f}, "
          f"frames {summary['n_scored']}/{summary['n_frames']}")
    return 0


def _cmd_solve(args):
    D, X, payload = read_instance(args.instance)
    cfg = SolverConfig(lam=float(payload["lambda"]), mu=float(payload["mu"]),
                       max_iters=int(payload.get("max_iters", 2000)),
                       tol=float(payload.get("tol", 1e-6)))
    C_hat, diag = solve(X, D, precompute(D, cfg), cfg)
    report = {"converged": diag.converged, "iterations": diag.n_iter,
              "r1": diag.r1, "r2": diag.r2, "objective": diag.objective,
              "C_hat": np.round(C_hat, 12).tolist()}
    print(json.dumps(report, indent=2))
    return 0


def _cmd_synth(args):
    seq = synth_sequence(args.out, n_frames=args.frames, sigma=args.sigma, seed=args.seed)
    print(f"wrote {len(seq)} frames to {args.out}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="sglst", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("track", help="track an OTB-layout sequence")
    t.add_argument("sequence", type=Path)
    t.add_argument("--config", type=Path)
    t.add_argument("--seed", type=int)
    t.add_argument("--features", choices=["intensity", "hog"])
    t.add_argument("--particles", type=int)
    t.add_argument("--templates", type=int)
    t.add_argument("--max-frames", type=int, default=0)
    t.add_argument("--out", type=Path, default=Path("results"))
    t.set_defaults(func=_cmd_track)

    e = sub.add_parser("eval", help="score a results file against ground truth")
    e.add_argument("results", type=Path)
    e.add_argument("groundtruth", type=Path)
    e.add_argument("--out", type=Path)
    e.set_defaults(func=_cmd_eval)

    s = sub.add_parser("solve", help="solve one serialized coding instance")
    s.add_argument("instance", type=Path)
    s.set_defaults(func=_cmd_solve)

    g = sub.add_parser("synth", help="render a synthetic sequence")
    g.add_argument("--frames", type=int, default=100)
    g.add_argument("--sigma", type=float, default=2.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", type=Path, default=Path("synth"))
    g.set_defaults(func=_cmd_synth)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError, ArithmeticError) as exc:
        print(f"sglst: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
