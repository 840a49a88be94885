"""Training CLI: fit a graph-attention classifier on GRIG datasets.

Exit codes: 0 success, 2 usage, 3 I/O, 4 format, 6 training diverged.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .attention import attention_csv, export_attention
from .config import PRESETS, BlockSpec, GatConfig, preset
from .data import GrigLoadError, load_grig
from .model import build_model, expected_parameter_count, parameter_count
from .train import train_eval

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_FORMAT = 4
EXIT_DIVERGED = 6


def _parse_blocks(text: str) -> list[BlockSpec]:
    # "8/8/8,8/16/4,16/24/4" -> three blocks
    blocks = []
    for part in text.split(","):
        d1, d2, h = (int(v) for v in part.split("/"))
        blocks.append(BlockSpec(d1, d2, h))
    return blocks


def _config_from_args(args) -> GatConfig:
    overrides = dict(
        lr_start=args.lr,
        lr_floor=args.lr_floor,
        momentum=args.momentum,
        weight_decay=args.weight_decay,
        batch_size=args.batch,
        max_iterations=args.iters,
        eval_every=args.eval_every,
        seed=args.seed,
    )
    if args.blocks:
        return GatConfig(blocks=_parse_blocks(args.blocks), **overrides)
    return preset(args.config, **overrides)


def cmd_train(args) -> int:
    cfg = _config_from_args(args)
    train_batch = load_grig(args.train)
    test_batch = load_grig(args.test)
    model, report = train_eval(train_batch, test_batch, cfg)
    print(
        f"params={report.param_count} iterations={report.iterations_run} "
        f"final test top-1: {report.final_test_acc:.2f}% (train {report.final_train_acc:.2f}%) "
        f"in {report.wall_time_s:.0f}s"
    )
    if args.report:
        Path(args.report).write_text(report.to_json())
    if args.attention:
        rows = export_attention(model, test_batch.graphs, args.top_n)
        Path(args.attention).write_text(attention_csv(rows))
    return EXIT_DIVERGED if report.diverged else EXIT_OK


def cmd_params(args) -> int:
    feature_dim, classes = args.features, args.classes
    names = [args.config] if args.config else sorted(PRESETS)
    for name in names:
        cfg = preset(name)
        model = build_model(feature_dim, classes, cfg)
        built = parameter_count(model)
        assert built == expected_parameter_count(feature_dim, classes, cfg)
        spec = ",".join(f"{b.dim1}/{b.dim2}/{b.heads}" for b in cfg.blocks)
        print(f"{name:>10}  {built:>8} params  [{spec}]")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grig-gat", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train and evaluate a classifier")
    p.add_argument("--train", required=True, help="training-set .grig file")
    p.add_argument("--test", required=True, help="test-set .grig file")
    p.add_argument("--config", default="mnist-a", choices=sorted(PRESETS))
    p.add_argument("--blocks", default=None, help="custom blocks, e.g. 8/8/8,8/16/4")
    p.add_argument("--iters", type=int, default=20_000)
    p.add_argument("--batch", type=int, default=96)
    p.add_argument("--lr", type=float, default=0.4)
    p.add_argument("--lr-floor", type=float, default=0.005)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--weight-decay", type=float, default=8e-4)
    p.add_argument("--eval-every", type=int, default=250)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", default=None, help="write a JSON training report here")
    p.add_argument("--attention", default=None, help="write per-graph attention CSV here")
    p.add_argument("--top-n", type=int, default=5)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("params", help="print parameter counts for the presets")
    p.add_argument("--config", default=None, choices=sorted(PRESETS))
    p.add_argument("--features", type=int, default=10)
    p.add_argument("--classes", type=int, default=10)
    p.set_defaults(func=cmd_params)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code else EXIT_OK
    try:
        return args.func(args)
    except GrigLoadError as e:
        print(f"format error: {e}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except (KeyError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


def entrypoint():
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    entrypoint()
