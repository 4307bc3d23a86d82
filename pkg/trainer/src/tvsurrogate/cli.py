"""Command line front end: train, predict, probe-predict, bench."""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from .inference import bench_forward, export_for_eval, export_for_probes
from .losses import SELECTORS
from .training import TrainConfig, load_checkpoint, train


def _add_train(sub):
    p = sub.add_parser("train", help="train a surrogate on a dataset directory")
    p.add_argument("dataset", help="directory containing manifest.json and tensors")
    p.add_argument("--out", required=True, help="output directory for checkpoint/log")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--loss", choices=SELECTORS, default="L")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--holdout", type=int, default=50)


def cmd_train(args) -> int:
    cfg = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        selector=args.loss,
        seed=args.seed,
        holdout=args.holdout,
    )
    log = train(args.dataset, args.out, cfg)
    print(
        f"finished {cfg.epochs} epochs in {log['total_seconds']}s, "
        f"final held-out loss {log['history'][-1]['held_loss']:.5f}"
    )
    return 0


def cmd_predict(args) -> int:
    model, _ = load_checkpoint(args.checkpoint)
    n = export_for_eval(model, args.dataset, args.out)
    print(f"wrote {n} prediction tensors to {args.out}")
    return 0


def cmd_probe_predict(args) -> int:
    model, _ = load_checkpoint(args.checkpoint)
    n = export_for_probes(model, args.probes, args.out)
    print(f"wrote {n} probe predictions to {args.out}")
    return 0


def cmd_bench(args) -> int:
    model, _ = load_checkpoint(args.checkpoint)
    sizes = [int(s) for s in args.sizes.split(",")]
    rows = bench_forward(model, sizes, repeats=args.repeats)
    for row in rows:
        print(f"{row['size']:5d}x{row['size']:<5d} {row['seconds']:10.3f} s")
    if args.output:
        Path(args.output).write_text(json.dumps(rows, indent=2))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tvsurrogate", description="band-decomposition surrogate trainer"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    _add_train(sub)

    p = sub.add_parser("predict", help="predict bands for a dataset directory")
    p.add_argument("checkpoint")
    p.add_argument("dataset")
    p.add_argument("--out", required=True)

    p = sub.add_parser("probe-predict", help="predict bands for invariance probes")
    p.add_argument("checkpoint")
    p.add_argument("probes")
    p.add_argument("--out", required=True)

    p = sub.add_parser("bench", help="time the forward pass at given sizes")
    p.add_argument("checkpoint")
    p.add_argument("--sizes", default="64,128,256,512,1024")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--output", default=None)

    args = parser.parse_args(argv)
    handlers = {
        "train": cmd_train,
        "predict": cmd_predict,
        "probe-predict": cmd_probe_predict,
        "bench": cmd_bench,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    raise SystemExit(main())
