"""Command line: fine-tune a model, then dump impact matrices.

    ptm-extract finetune --dataset train.jsonl --model roberta-base --out ft/
    ptm-extract dump --dataset train.jsonl --model ft/encoder --layer 11 \\
        --out dumps/

``dump --model`` accepts either a hub model name or a local checkpoint
directory (such as the ``encoder/`` directory the finetune command
writes).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from transformers import AutoModel, AutoTokenizer

from .data import DataError, load_canonical_jsonl
from .dump import AlignmentFailure, DumpError, dump_matrices
from .finetune import ConfigError, FinetuneConfig, finetune


def cmd_finetune(args) -> int:
    config = FinetuneConfig(
        model=args.model,
        batch_size=args.batch_size,
        dropout=args.dropout,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        dev_fraction=args.dev_fraction,
        seed=args.seed,
        max_length=args.max_length,
    )
    samples = load_canonical_jsonl(args.dataset)
    result = finetune(samples, config, args.out, device=args.device)
    final = result.dev_accuracy[-1] if result.dev_accuracy else float("nan")
    print(f"fine-tuned {args.model} on {len(samples)} samples; "
          f"dev accuracy {final:.4f}; checkpoint at {result.checkpoint_dir}")
    return 0


def cmd_dump(args) -> int:
    samples = load_canonical_jsonl(args.dataset)
    tokenizer = AutoTokenizer.from_pretrained(args.model)
    model = AutoModel.from_pretrained(args.model).to(args.device)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    layer = None if args.all_layers else args.layer
    written = dump_matrices(
        model, tokenizer, samples, layer,
        outdir / "matrices.jsonl", outdir / "alignments.jsonl",
        max_length=args.max_length, batch_size=args.batch_size, device=args.device,
    )
    print(f"dumped {len(samples)} sentences x {len(written)} layer file(s) -> {outdir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ptm-extract")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("finetune", help="fine-tune on an aspect-sentiment dataset")
    p.add_argument("--dataset", required=True, help="canonical JSON Lines file")
    p.add_argument("--model", required=True)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--learning-rate", type=float, default=2e-4)
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--dev-fraction", type=float, default=0.2)
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("dump", help="dump impact matrices and alignments")
    p.add_argument("--dataset", required=True)
    p.add_argument("--model", required=True, help="model name or checkpoint directory")
    p.add_argument("--layer", type=int, default=11)
    p.add_argument("--all-layers", action="store_true",
                   help="one matrix file per layer, for layer-selection sweeps")
    p.add_argument("--batch-size", type=int, default=64)
    p.set_defaults(func=cmd_dump)

    for sp in sub.choices.values():
        sp.add_argument("--out", required=True)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--max-length", type=int, default=128)
        sp.add_argument("--device", default="cpu")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError,) as exc:
        print(f"ptm-extract: config error: {exc}", file=sys.stderr)
        return 2
    except (DataError, DumpError, AlignmentFailure, OSError) as exc:
        print(f"ptm-extract: input error: {exc}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
