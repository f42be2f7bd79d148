"""Command-line entry point: ``dynseg {segment,stream,eval,synth,bench}``.

Exit codes: 0 success, 1 validation/usage error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from . import io
from .config import ConfigError, RunConfig, coerce, load_config
from .core import labels_to_boundaries
from .evaluation import (average_results, boundary_pr, format_report, json_records,
                         segment_pr)
from .online import evolve
from .pipeline import held_cluster_stream, segment
from .spectral import init_model
from .synthetic import SyntheticSpec, generate_synthetic

log = logging.getLogger("dynseg")

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; that code is reserved for I/O errors
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _add_run_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--warmup-len", type=int)
    p.add_argument("--kernel-sigma", help="number, 'auto' or 'median'")
    p.add_argument("--uncertainty-c", type=float)
    p.add_argument("--k-max", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key (repeatable)")


def _run_config(args) -> RunConfig:
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = coerce(*item.split("=", 1))
        overrides[k] = v
    if args.kernel_sigma is not None:
        overrides["kernel_sigma"] = coerce("kernel_sigma", args.kernel_sigma)[1]
    for name in ("warmup_len", "uncertainty_c", "k_max", "seed"):
        if getattr(args, name) is not None:
            overrides[name] = getattr(args, name)
    if getattr(args, "k_actions", None) is not None:
        overrides["k_actions"] = args.k_actions
    return load_config(args.config, overrides)


def cmd_segment(args) -> int:
    cfg = _run_config(args)
    X = io.read_features(args.features, args.format)
    result = segment(X, cfg, aggregate_actions=args.aggregate)
    if args.out_labels:
        io.write_labels(args.out_labels, result.labels)
    if args.out_boundaries:
        io.write_boundaries(args.out_boundaries, result.boundaries)
    if not args.out_labels and not args.out_boundaries:
        sys.stdout.write(io.format_boundaries(result.boundaries))
    log.info("%d frames, %d clusters, %d boundaries", len(result.labels), result.model.n_clusters,
             len(result.boundaries))
    return EXIT_OK


def _emit(record: dict) -> None:
    sys.stdout.write(json.dumps(record, sort_keys=True) + "\n")
    sys.stdout.flush()


def cmd_stream(args) -> int:
    cfg = _run_config(args)
    warm = []
    model = None
    prev = None
    labels = []
    t = 0
    for x in io.iter_feature_rows(args.features, args.format):
        if model is None:
            warm.append(x)
            if len(warm) == cfg.warmup_len:
                model = init_model(np.vstack(warm), **cfg.init_kwargs())
                labels.extend(model.warmup_labels)
                for b in labels_to_boundaries(labels):
                    _emit({"event": "boundary", "frame": b, "from": labels[b - 1], "to": labels[b]})
                prev = labels[-1]
                _emit({"event": "initialized", "frame": t, "clusters": model.n_clusters})
            t += 1
            continue
        out = evolve(model, x, mean_update=cfg.mean_update)
        labels.append(out.cluster_id)
        if out.created_new:
            _emit({"event": "new_cluster", "frame": t, "cluster": out.cluster_id})
        if out.cluster_id != prev:
            _emit({"event": "boundary", "frame": t, "from": prev, "to": out.cluster_id})
        prev = out.cluster_id
        t += 1
    if model is None:
        if len(warm) < 2:
            raise ValueError(f"stream has {len(warm)} frames; need at least 2")
        model = init_model(np.vstack(warm), **cfg.init_kwargs())
        labels.extend(model.warmup_labels)
        for b in labels_to_boundaries(labels):
            _emit({"event": "boundary", "frame": b, "from": labels[b - 1], "to": labels[b]})
    _emit({"event": "end", "frames": t, "clusters": model.n_clusters})
    if args.out_labels:
        io.write_labels(args.out_labels, labels)
    return EXIT_OK


def _pairs(pred, gt, what):
    if len(pred) != len(gt):
        raise ValueError(f"need the same number of --pred-{what} and --gt-{what} files")
    return list(zip(pred, gt))


def cmd_eval(args) -> int:
    if not (args.pred_labels or args.pred_boundaries):
        raise UsageError("eval needs --pred-labels/--gt-labels or --pred-boundaries/--gt-boundaries")
    cfg = load_config(args.config) if args.config else RunConfig()
    tolerance = cfg.tolerance_frames if args.tolerance is None else args.tolerance
    text = []
    records = []
    if args.pred_labels or args.gt_labels:
        results = {}
        for p, g in _pairs(args.pred_labels, args.gt_labels, "labels"):
            results[p] = segment_pr(io.read_labels(p), io.read_labels(g), credit_rule=cfg.credit_rule)
        agg = average_results(list(results.values()))
        text.append(format_report(results, agg, "segment"))
        records.append(json_records(results, agg, "segment"))
    if args.pred_boundaries or args.gt_boundaries:
        results = {}
        for p, g in _pairs(args.pred_boundaries, args.gt_boundaries, "boundaries"):
            results[p] = boundary_pr(io.read_boundaries(p), io.read_boundaries(g), tolerance)
        agg = average_results(list(results.values()))
        agg["tolerance_frames"] = tolerance
        text.append(format_report(results, agg, "boundary"))
        records.append(json_records(results, agg, "boundary"))
    sys.stdout.write("".join(text))
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            fh.write("".join(records))
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = SyntheticSpec(dim=args.dim, segment_count=args.segments,
                         segment_length=(args.min_length, args.max_length),
                         mean_separation=args.separation, noise_std=args.noise_std, seed=args.seed)
    X, labels, boundaries = generate_synthetic(spec)
    io.write_features(args.out_features, X, args.format)
    if args.out_labels:
        io.write_labels(args.out_labels, labels)
    if args.out_boundaries:
        io.write_boundaries(args.out_boundaries, boundaries)
    return EXIT_OK


def cmd_bench(args) -> int:
    lengths = [int(v) for v in args.lengths.split(",") if v.strip()]
    if not lengths or min(lengths) < 1:
        raise ValueError("--lengths must be positive integers")
    rows = []
    for n in lengths:
        warm, stream = held_cluster_stream(n, args.dim, args.k, seed=args.seed)
        per_frame = []
        for _ in range(args.repeats):
            model = init_model(warm, uncertainty_c=args.uncertainty_c, seed=args.seed)
            costs = 0
            t0 = time.perf_counter()
            for x in stream:
                costs += evolve(model, x, validate=False).update_cost
            per_frame.append((time.perf_counter() - t0) / n)
        rows.append({"frames": n, "dim": args.dim, "clusters": model.n_clusters,
                     "mean_update_cost": costs / n, "mean_frame_seconds": float(np.mean(per_frame)),
                     "min_frame_seconds": float(np.min(per_frame))})
    for r in rows:
        if args.json:
            sys.stdout.write(json.dumps(r, sort_keys=True) + "\n")
        else:
            sys.stdout.write(f"frames {r['frames']:>9d}  clusters {r['clusters']:>3d}  "
                             f"cost/frame {r['mean_update_cost']:.2f}  "
                             f"us/frame {1e6 * r['mean_frame_seconds']:.2f}\n")
    return EXIT_OK


def build_parser() -> Parser:
    parser = Parser(prog="dynseg", description="Online temporal segmentation by dynamic clustering.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=Parser)

    p = sub.add_parser("segment", help="offline run: init + stream (+ aggregation)")
    p.add_argument("--features", required=True)
    p.add_argument("--format", choices=("csv", "binary"))
    p.add_argument("--out-labels")
    p.add_argument("--out-boundaries")
    p.add_argument("--aggregate", action="store_true", help="run soft-assignment pooling + pattern k-means")
    p.add_argument("--k-actions", type=int)
    _add_run_overrides(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("stream", help="online simulation; boundary events as JSON lines")
    p.add_argument("--features", required=True)
    p.add_argument("--format", choices=("csv", "binary"))
    p.add_argument("--out-labels")
    _add_run_overrides(p)
    p.set_defaults(func=cmd_stream)

    p = sub.add_parser("eval", help="segment and boundary precision/recall")
    p.add_argument("--pred-labels", action="append", default=[])
    p.add_argument("--gt-labels", action="append", default=[])
    p.add_argument("--pred-boundaries", action="append", default=[])
    p.add_argument("--gt-boundaries", action="append", default=[])
    p.add_argument("--tolerance", type=int, help="boundary tolerance in frames (default: config, 2)")
    p.add_argument("--config")
    p.add_argument("--json-out", help="write line-delimited JSON records here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a piecewise-stationary feature stream")
    p.add_argument("--out-features", required=True)
    p.add_argument("--out-labels")
    p.add_argument("--out-boundaries")
    p.add_argument("--format", choices=("csv", "binary"))
    p.add_argument("--dim", type=int, default=20)
    p.add_argument("--segments", type=int, default=8)
    p.add_argument("--min-length", type=int, default=200)
    p.add_argument("--max-length", type=int, default=400)
    p.add_argument("--separation", type=float, default=20.0)
    p.add_argument("--noise-std", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="per-frame latency across stream lengths")
    p.add_argument("--lengths", default="10000,100000")
    p.add_argument("--dim", type=int, default=20)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--uncertainty-c", type=float, default=6.0)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage() + "dynseg: error: a subcommand is required")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except BrokenPipeError:
        # downstream reader closed early (e.g. piped into head)
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    except io.FormatError as exc:
        print(f"dynseg: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"dynseg: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"dynseg: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
