"""Command-line interface.

Subcommands: build-benchmark, make-toy-real, train, eval, ablate, plot,
export-embeddings. Every failure raised by the library lands as a one-line
error on stderr and a nonzero exit code.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .ablate import load_grid, run_ablation
from .benchgen import build_benchmark, render_real_dataset
from .config import config_hash, parse_config
from .data import load_benchmark
from .engine import Trainer, run_training
from .errors import RSMatchError
from .evaluate import evaluate_checkpoint, export_embeddings, make_detector_hook


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rsmatch",
        description="Semi-supervised training that detects and exploits "
                    "synthetic contamination in unlabeled data.")
    parser.add_argument("--version", action="version", version=f"rsmatch {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-benchmark",
                       help="mix synthetic images into a real dataset's unlabeled split")
    p.add_argument("--real", required=True, help="manifest of the fully labeled real dataset")
    p.add_argument("--alpha", type=float, required=True,
                   help="synthetic ratio: ceil(alpha * N) synthetic images per class")
    p.add_argument("--labels-per-class", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--prompts-per-class", type=int, default=12)

    p = sub.add_parser("make-toy-real", help="render a small procedural real dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--num-classes", type=int, default=4)
    p.add_argument("--per-class", type=int, default=525)
    p.add_argument("--test-per-class", type=int, default=250)
    p.add_argument("--image-size", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("train", help="train on a benchmark directory")
    p.add_argument("--config", required=True)
    p.add_argument("--benchmark", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--log-every", type=int, default=50)

    p = sub.add_parser("eval", help="score a checkpoint on a benchmark")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--benchmark", required=True)

    p = sub.add_parser("ablate", help="run a grid of config variants")
    p.add_argument("--grid", required=True)
    p.add_argument("--benchmark", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--log-every", type=int, default=50)

    p = sub.add_parser("plot", help="render metric curves or ablation bars")
    p.add_argument("--metrics", help="run directory or metrics.jsonl")
    p.add_argument("--ablation", help="ablation results.json")
    p.add_argument("--out", required=True)

    p = sub.add_parser("export-embeddings",
                       help="dump penultimate features with hidden origins to CSV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--benchmark", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--splits", default="test,unlabeled")
    return parser


def _cmd_build_benchmark(args) -> int:
    out = build_benchmark(args.real, args.out, alpha=args.alpha,
                          labeled_per_class=args.labels_per_class,
                          seed=args.seed, prompts_per_class=args.prompts_per_class)
    print(f"benchmark written to {out}")
    return 0


def _cmd_make_toy_real(args) -> int:
    path = render_real_dataset(args.out, num_classes=args.num_classes,
                               per_class=args.per_class,
                               test_per_class=args.test_per_class,
                               image_size=args.image_size, seed=args.seed)
    print(f"real dataset manifest written to {path}")
    return 0


def _cmd_train(args) -> int:
    config = parse_config(args.config)
    benchmark = load_benchmark(args.benchmark)
    run_dir = Path(args.out) / f"run-{config_hash(config)}"
    hooks = ()
    if config.method == "rsmatch" and len(benchmark.sidecar) > 0:
        hooks = (make_detector_hook(benchmark),)
    summary = run_training(config, benchmark, run_dir, hooks=hooks,
                           log_every=args.log_every)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _cmd_eval(args) -> int:
    benchmark = load_benchmark(args.benchmark)
    print(json.dumps(evaluate_checkpoint(args.checkpoint, benchmark),
                     indent=2, sort_keys=True))
    return 0


def _cmd_ablate(args) -> int:
    variants = load_grid(args.grid)
    benchmark = load_benchmark(args.benchmark)
    results = run_ablation(variants, benchmark, args.out, log_every=args.log_every)
    for row in results:
        det = row.get("detector_accuracy")
        det_txt = "" if det is None else f"  detector={det:.4f}"
        print(f"{row['variant']}: best={row['best_test_accuracy']:.4f}{det_txt}")
    print(f"results under {args.out}")
    return 0


def _cmd_plot(args) -> int:
    from .plots import plot_ablation, plot_metrics
    if bool(args.metrics) == bool(args.ablation):
        raise RSMatchError("pass exactly one of --metrics or --ablation")
    if args.metrics:
        out = plot_metrics(args.metrics, args.out)
    else:
        out = plot_ablation(args.ablation, args.out)
    print(f"plot written to {out}")
    return 0


def _cmd_export_embeddings(args) -> int:
    benchmark = load_benchmark(args.benchmark)
    trainer = Trainer.restore(args.checkpoint, benchmark)
    splits = tuple(s.strip() for s in args.splits.split(",") if s.strip())
    out = export_embeddings(trainer, benchmark, args.out, splits=splits)
    print(f"embeddings written to {out}")
    return 0


_COMMANDS = {
    "build-benchmark": _cmd_build_benchmark,
    "make-toy-real": _cmd_make_toy_real,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "ablate": _cmd_ablate,
    "plot": _cmd_plot,
    "export-embeddings": _cmd_export_embeddings,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except RSMatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
