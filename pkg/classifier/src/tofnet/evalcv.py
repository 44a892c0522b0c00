"""Cross-validated evaluation on imported fold plans.

Folds are never re-derived here: they come from the evaluation harness's
fold file, so deep models and the generator-side baseline are always
compared on identical splits. Output TSV/CSV schemas match the harness's
report files.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import HistogramDataset, fold_assignments, preprocess_matrix
from .models import NetSpec
from .train import TrainSpec, predict, train


@dataclass
class CellEvaluation:
    cell: str
    model: str
    fold_accuracies: list
    confusion: np.ndarray  # pooled over folds

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.fold_accuracies))


@dataclass
class EvalReport:
    rows: list = field(default_factory=list)      # (cell, model, fold, accuracy)
    cells: dict = field(default_factory=dict)     # (cell, model) -> CellEvaluation

    def grand_average(self, model: str) -> float:
        accs = [c.mean_accuracy for (cell, m), c in self.cells.items() if m == model]
        return float(np.mean(accs))


def evaluate_cv(ds: HistogramDataset, fold_plans: dict, arch_specs: dict,
                trainspec: TrainSpec = TrainSpec(),
                cells: list | None = None) -> EvalReport:
    """Train/test every (cell, architecture) pair on the imported folds.

    arch_specs: {model_name: NetSpec}; cells restricts evaluation to a
    subset of cell keys (default: every cell present in the fold file).
    """
    smooth, anchor = ds.preprocess_params()
    report = EvalReport()
    wanted = cells if cells is not None else [c for c in ds.cells()
                                              if c in fold_plans]
    for cell in wanted:
        mask = ds.cell_mask(cell)
        folds = fold_assignments(fold_plans, ds, cell, mask)
        x = preprocess_matrix(ds.counts[mask], smooth, anchor)
        y = ds.labels[mask]
        n_classes = ds.num_classes
        n_folds = int(folds.max()) + 1
        for name, spec in arch_specs.items():
            accs = []
            confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
            for f in range(n_folds):
                test = folds == f
                result = train(spec, x[~test], y[~test], trainspec)
                pred = predict(result.model, x[test])
                accs.append(float((pred == y[test]).mean()))
                np.add.at(confusion, (y[test], pred), 1)
                report.rows.append((cell, name, f, accs[-1]))
            report.cells[(cell, name)] = CellEvaluation(cell, name, accs, confusion)
    return report


def write_report(report: EvalReport, out_dir) -> Path:
    """report.tsv / summary.tsv / confusion CSVs in the harness's schemas."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.tsv", "w", encoding="utf-8") as fh:
        fh.write("cell\tmodel\tfold\taccuracy\n")
        for cell, model, fold, acc in report.rows:
            fh.write(f"{cell}\t{model}\t{fold}\t{acc:.6f}\n")
    models = sorted({m for (_, m) in report.cells})
    with open(out / "summary.tsv", "w", encoding="utf-8") as fh:
        fh.write("cell\tmodel\tmean_accuracy\tstd_accuracy\n")
        for (cell, model), ev in report.cells.items():
            fh.write(f"{cell}\t{model}\t{ev.mean_accuracy:.6f}\t"
                     f"{float(np.std(ev.fold_accuracies)):.6f}\n")
        for model in models:
            fh.write(f"ALL\t{model}\t{report.grand_average(model):.6f}\t\n")
    for (cell, model), ev in report.cells.items():
        safe = cell.replace(",", "_").replace("=", "-")
        np.savetxt(out / f"confusion_{safe}_{model}.csv", ev.confusion,
                   fmt="%d", delimiter=",")
    return out
