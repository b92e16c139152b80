"""CLI: fine-tune adapters on an exported trace dataset."""

import argparse
import json
import sys

from .data import DatasetSchemaError
from .trainer import TrainConfig, train


def main(argv=None):
    parser = argparse.ArgumentParser(prog="tracesft")
    sub = parser.add_subparsers(dest="command", required=True)
    fit = sub.add_parser("train", help="run adapter fine-tuning")
    fit.add_argument("--dataset", required=True)
    fit.add_argument("--out-dir", default="adapter_out")
    fit.add_argument("--learning-rate", type=float, default=1e-4)
    fit.add_argument("--batch-size", type=int, default=4)
    fit.add_argument("--grad-accumulation", type=int, default=4)
    fit.add_argument("--lora-rank", type=int, default=32)
    fit.add_argument("--lora-alpha", type=float, default=64.0)
    fit.add_argument("--epochs", type=int, default=3)
    fit.add_argument("--max-steps", type=int, default=None)
    fit.add_argument("--seed", type=int, default=42)
    args = parser.parse_args(argv)

    cfg = TrainConfig(
        dataset_path=args.dataset,
        out_dir=args.out_dir,
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        grad_accumulation=args.grad_accumulation,
        lora_rank=args.lora_rank,
        lora_alpha=args.lora_alpha,
        epochs=args.epochs,
        max_steps=args.max_steps,
        seed=args.seed,
    )
    try:
        result = train(cfg)
    except (DatasetSchemaError, RuntimeError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    print(
        json.dumps(
            {
                "steps": result.steps,
                "first_loss": result.first_step_loss,
                "last_loss": result.losses[-1],
                "adapter": result.adapter_path,
                "loss_curve": result.loss_curve_path,
            }
        )
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
