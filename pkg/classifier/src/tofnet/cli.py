"""Command line: cross-validated training of deep models on generated
histogram datasets, on folds imported from the evaluation harness.
"""

from __future__ import annotations

import argparse
import sys

from .data import DataFormatError, load_dataset, read_fold_file
from .models import ARCHITECTURES, NetSpec, small_spec
from .evalcv import evaluate_cv, write_report
from .train import TrainSpec


def build_parser():
    p = argparse.ArgumentParser(
        prog="tofnet",
        description="Deep 1D classifiers for photon-counting histogram datasets")
    p.add_argument("--arch", required=True,
                   help=f"comma-separated subset of {ARCHITECTURES}")
    p.add_argument("--dataset", required=True, help="dataset directory")
    p.add_argument("--folds-file", required=True,
                   help="folds.tsv from the evaluation harness")
    p.add_argument("--cells", help="comma-separated cell keys (default: all)")
    p.add_argument("--batch", type=int, default=128)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=300, help="epoch cap")
    p.add_argument("--patience", type=int, default=20)
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.add_argument("--small", action="store_true",
                   help="desk-scale model widths instead of the defaults")
    p.add_argument("--out", required=True, help="report output directory")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        archs = [a.strip() for a in args.arch.split(",") if a.strip()]
        unknown = set(archs) - set(ARCHITECTURES)
        if unknown:
            raise DataFormatError(f"unknown architecture(s): {sorted(unknown)}")
        ds = load_dataset(args.dataset)
        plans = read_fold_file(args.folds_file)
        make = small_spec if args.small else (
            lambda a, k, c: NetSpec(a, input_length=k, n_classes=c))
        specs = {a: make(a, ds.num_bins, ds.num_classes) for a in archs}
        trainspec = TrainSpec(learning_rate=args.lr, batch_size=args.batch,
                              max_epochs=args.epochs, patience=args.patience,
                              val_fraction=args.val_fraction, seed=args.seed)
        cells = ([c.strip() for c in args.cells.split(";")] if args.cells
                 else None)
        report = evaluate_cv(ds, plans, specs, trainspec, cells=cells)
        write_report(report, args.out)
        print(f"wrote {args.out}")
        for (cell, model), ev in report.cells.items():
            print(f"{cell}\t{model}\t{ev.mean_accuracy:.4f}")
        return 0
    except (DataFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
