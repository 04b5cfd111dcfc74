"""Command-line front end.

Subcommands::

    whitney secants       --input pts.csv [--prune N] --output secants.csv
    whitney fit           --input pts.csv --dim K [--stretch] --output model.json
    whitney transform     --model model.json --input pts.csv --output reduced.csv
    whitney classify-fit  --train-images F --train-labels F --out-dir DIR
    whitney classify-eval --models-dir DIR --test-images F --test-labels F

Exit status: 0 success, 1 usage error, 2 data/format error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classify import (
    DEFAULT_DIM,
    DEFAULT_NEIGHBORS,
    DEFAULT_PRUNE,
    ClassModel,
    evaluate,
    fit_class_models,
    raw_model,
)
from .errors import DataError, UsageError, WhitneyError
from .formats import atomic_write, load_csv, load_idx, load_model, save_model, write_matrix_csv
from .optimizer import SearchConfig, init_frame, minimize, stretch_refine
from .secants import build_secants

log = logging.getLogger("whitney")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_search_flags(p, max_iters=500):
    p.add_argument("--max-iters", type=int, default=max_iters)
    p.add_argument("--step-tol", type=float, default=1e-6)
    p.add_argument("--initial-step", type=float, default=0.5)
    p.add_argument("--poll", type=int, default=None,
                   help="tangent directions polled per iteration "
                        "(default min(2k(m-k), 200), at most k(m-k))")
    p.add_argument("--seed", type=int, default=0)


def _config(args) -> SearchConfig:
    try:
        return SearchConfig(initial_step=args.initial_step,
                            step_tolerance=args.step_tol,
                            max_iterations=args.max_iters,
                            poll_directions=args.poll,
                            seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="whitney", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("secants", help="export the unit secant set of a point cloud")
    p.add_argument("--input", required=True)
    p.add_argument("--header", action="store_true", help="input CSV has a header row")
    p.add_argument("--prune", type=int, default=None)
    p.add_argument("--output", required=True)

    p = sub.add_parser("fit", help="fit a minimal-distortion frame to a point cloud")
    p.add_argument("--input", required=True)
    p.add_argument("--header", action="store_true")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--prune", type=int, default=None)
    p.add_argument("--stretch", action="store_true",
                   help="also fit an SPD stretch after the projection")
    p.add_argument("--trace", default=None, help="write the per-iteration trace CSV here")
    p.add_argument("--output", required=True)
    _add_search_flags(p)

    p = sub.add_parser("transform", help="project points with a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--header", action="store_true")
    p.add_argument("--output", required=True)

    p = sub.add_parser("classify-fit", help="fit one frame per digit class")
    p.add_argument("--train-images", required=True)
    p.add_argument("--train-labels", required=True)
    p.add_argument("--dim", type=int, default=DEFAULT_DIM)
    p.add_argument("--prune", type=int, default=DEFAULT_PRUNE)
    p.add_argument("--per-class", type=int, default=None,
                   help="use only the first N training images of each class")
    p.add_argument("--out-dir", required=True)
    _add_search_flags(p)

    p = sub.add_parser("classify-eval", help="evaluate reconstruction classification")
    p.add_argument("--models-dir", required=True)
    p.add_argument("--test-images", required=True)
    p.add_argument("--test-labels", required=True)
    p.add_argument("--neighbors", type=int, default=DEFAULT_NEIGHBORS)
    p.add_argument("--limit", type=int, default=None,
                   help="evaluate only the first N test images")
    p.add_argument("--raw", action="store_true",
                   help="ignore the frames and search neighbours in the ambient space")
    p.add_argument("--report", default=None, help="write the JSON report here")
    return parser


def cmd_secants(args):
    X = load_csv(args.input, args.header)
    S = build_secants(X, args.prune)
    S.to_csv(args.output)
    print(f"{len(S)} secants written to {args.output}")


def cmd_fit(args):
    cfg = _config(args)
    X = load_csv(args.input, args.header)
    if not 1 <= args.dim < X.shape[1]:
        raise UsageError(f"--dim must be in [1, {X.shape[1] - 1}]")
    S = build_secants(X, args.prune)
    p0 = init_frame(S, args.dim)
    frame, trace = minimize(S, p0, cfg)
    result = {"initial_distortion": trace.values[0], "distortion": trace.values[-1],
              "iterations": len(trace) - 1, "secants": len(S)}
    P = None
    if args.stretch:
        P, val = stretch_refine(frame, S, cfg)
        result["stretched_distortion"] = val
    if args.trace:
        trace.write_csv(args.trace)
    config = {"prune_count": args.prune, **cfg.to_dict()}
    save_model(args.output, frame, stretch=P, config=config,
               extra={"distortion": trace.values[-1]})
    print(json.dumps(result))


def cmd_transform(args):
    doc = load_model(args.model)
    frame = doc["frame"]
    X = load_csv(args.input, args.header)
    if X.shape[1] != frame.m:
        raise DataError(f"input has {X.shape[1]} columns, model expects {frame.m}")
    R = X @ frame.entries
    if doc.get("stretch") is not None:
        R = R @ doc["stretch"].T
    write_matrix_csv(args.output, R)


def _model_path(out_dir, label):
    return Path(out_dir) / f"class_{label}.json"


def cmd_classify_fit(args):
    cfg = _config(args)
    X, y = load_idx(args.train_images, args.train_labels)
    clouds = {}
    for lab in sorted(set(y.tolist())):
        pts = X[y == lab]
        if args.per_class is not None:
            pts = pts[:args.per_class]
        clouds[lab] = pts
    models = fit_class_models(clouds, args.dim, args.prune, cfg, threads=args.threads)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = {"prune_count": args.prune, **cfg.to_dict()}
    summary = {}
    for mdl in models:
        points_file = f"class_{mdl.label}.points.npy"
        with atomic_write(out / points_file, "wb") as fh:
            np.save(fh, mdl.training_points)
        save_model(_model_path(out, mdl.label), mdl.frame, label=mdl.label,
                   config=config,
                   extra={"distortion": mdl.distortion,
                          "training_points": points_file})
        summary[str(mdl.label)] = mdl.distortion
    print(json.dumps({"distortion": summary}))


def load_class_models(models_dir, raw=False):
    models = []
    paths = sorted(Path(models_dir).glob("class_*.json"))
    if not paths:
        raise DataError(f"no class_*.json model files in {models_dir}")
    for path in paths:
        doc = load_model(path)
        ref = doc.get("training_points")
        if not ref:
            raise DataError(f"{path}: model has no training_points reference")
        try:
            pts = np.load(Path(models_dir) / ref)
        except OSError as exc:
            raise DataError(f"{path}: cannot load {ref}: {exc}") from exc
        if raw:
            models.append(raw_model(doc["label"], pts))
        else:
            models.append(ClassModel(doc["label"], doc["frame"], pts,
                                     distortion=doc.get("distortion")))
    return models


def cmd_classify_eval(args):
    models = load_class_models(args.models_dir, raw=args.raw)
    X, y = load_idx(args.test_images, args.test_labels)
    if args.limit is not None:
        X, y = X[:args.limit], y[:args.limit]
    report = evaluate(models, X, y, args.neighbors, threads=args.threads)
    text = report.to_json()
    if args.report:
        with atomic_write(args.report) as fh:
            fh.write(text + "\n")
    print(json.dumps({"error_rate": report.error_rate, "total": report.total}))


COMMANDS = {
    "secants": cmd_secants,
    "fit": cmd_fit,
    "transform": cmd_transform,
    "classify-fit": cmd_classify_fit,
    "classify-eval": cmd_classify_eval,
}


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return UsageError.exit_code
    try:
        COMMANDS[args.command](args)
    except WhitneyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except np.linalg.LinAlgError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
