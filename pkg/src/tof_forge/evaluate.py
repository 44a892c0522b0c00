"""Evaluation protocol: stratified k-fold CV, a nearest-centroid baseline,
confusion matrices and condition sweeps.

The baseline scores a preprocessed histogram against per-class mean
templates by normalized cross-correlation, maximized over a small circular
shift window; it is deliberately simple so the simulator can be validated
end to end without any learned model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .forge import LabeledDataset, preprocess_matrix


@dataclass(frozen=True, eq=False)
class FoldPlan:
    """Per-sample fold assignment, stratified per class."""

    assignments: np.ndarray
    n_folds: int
    seed: int

    def test_mask(self, fold: int) -> np.ndarray:
        return self.assignments == fold


def make_folds(dataset_or_labels, n_folds: int = 10, seed: int = 0) -> FoldPlan:
    """Stratified, seed-deterministic fold assignment.

    Every class is shuffled independently and dealt round-robin, with the
    starting fold rotating between classes so global fold sizes differ by
    at most one. A class with fewer than n_folds samples is an error.
    """
    labels = getattr(dataset_or_labels, "labels", dataset_or_labels)
    labels = np.asarray(labels)
    if n_folds < 2:
        raise ConfigError("need at least 2 folds (1 leaves no training split)")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    assignments = np.full(labels.shape[0], -1, dtype=np.int64)
    start = 0
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        if idx.shape[0] < n_folds:
            raise ConfigError(
                f"class {cls} has {idx.shape[0]} samples, fewer than {n_folds} folds")
        rng.shuffle(idx)
        assignments[idx] = (start + np.arange(idx.shape[0])) % n_folds
        start = (start + idx.shape[0]) % n_folds
    return FoldPlan(assignments, n_folds, seed)


@dataclass(frozen=True, eq=False)
class SplitPlan:
    """Single stratified train/val/test partition (field-style protocol)."""

    train_mask: np.ndarray
    val_mask: np.ndarray
    test_mask: np.ndarray
    ratios: tuple
    seed: int


def make_ratio_split(dataset_or_labels, ratios=(2, 4, 4), seed: int = 0) -> SplitPlan:
    """Stratified train/val/test split with the given proportions.

    Each class is shuffled and dealt by largest-remainder allocation, so
    per-class counts match the ratios as closely as integers allow and
    every part receives at least one sample of every class.
    """
    labels = getattr(dataset_or_labels, "labels", dataset_or_labels)
    labels = np.asarray(labels)
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ConfigError("ratios must be three positive numbers")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    masks = [np.zeros(labels.shape[0], dtype=bool) for _ in range(3)]
    fractions = np.array(ratios) / sum(ratios)
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        if idx.shape[0] < 3:
            raise ConfigError(f"class {cls} has {idx.shape[0]} samples, "
                              f"fewer than the 3 split parts")
        rng.shuffle(idx)
        quota = fractions * (idx.shape[0] - 3)
        counts = np.floor(quota).astype(int)
        rem = idx.shape[0] - 3 - counts.sum()
        order = np.argsort(-(quota - counts), kind="stable")
        counts[order[:rem]] += 1
        counts += 1
        stops = np.cumsum(counts)
        masks[0][idx[:stops[0]]] = True
        masks[1][idx[stops[0]:stops[1]]] = True
        masks[2][idx[stops[1]:]] = True
    return SplitPlan(masks[0], masks[1], masks[2], ratios, seed)


def run_split(x: np.ndarray, y: np.ndarray, plan: SplitPlan, model):
    """Fit on the train part, report the test-part confusion and accuracy.

    The validation part is not consumed by the centroid baseline; it exists
    so external early-stopping models can use the identical partition.
    """
    y = np.asarray(y)
    n_classes = int(y.max()) + 1
    model.fit(x[plan.train_mask], y[plan.train_mask])
    pred = np.asarray(model.predict(x[plan.test_mask]))
    cm = confusion_matrix(y[plan.test_mask], pred, n_classes)
    return cm, accuracy_of(cm)


def train_centroid_baseline(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-class mean of preprocessed vectors; classes must be 0..C-1."""
    y = np.asarray(y)
    n_classes = int(y.max()) + 1
    templates = np.empty((n_classes, x.shape[1]))
    for c in range(n_classes):
        members = x[y == c]
        if members.shape[0] == 0:
            raise ConfigError(f"class {c} has no training samples")
        templates[c] = members.mean(axis=0)
    return templates


def _shift_scores(x: np.ndarray, templates: np.ndarray, shift_window: int) -> np.ndarray:
    """Best normalized cross-correlation per class over circular shifts.

    x: (n, K) preprocessed samples; templates: (C, K). Returns (n, C).
    """
    k = x.shape[1]
    xn = x / np.maximum(np.linalg.norm(x, axis=1, keepdims=True), 1e-300)
    tn = templates / np.maximum(np.linalg.norm(templates, axis=1, keepdims=True), 1e-300)
    fx = np.fft.rfft(xn, axis=1)
    ft = np.fft.rfft(tn, axis=1)
    scores = np.empty((x.shape[0], templates.shape[0]))
    w = min(shift_window, (k - 1) // 2)
    for c in range(templates.shape[0]):
        corr = np.fft.irfft(fx * np.conj(ft[c]), n=k, axis=1)
        allowed = np.concatenate([corr[:, :w + 1], corr[:, k - w:]], axis=1)
        scores[:, c] = allowed.max(axis=1)
    return scores


def classify_centroid(templates: np.ndarray, sample: np.ndarray,
                      shift_window: int = 32) -> int:
    """Class of the best shift-searched template match; ties -> lowest index."""
    scores = _shift_scores(np.asarray(sample, dtype=float)[None, :], templates,
                           shift_window)
    return int(np.argmax(scores[0]))


class CentroidClassifier:
    """Nearest-centroid matched filter with a circular shift search."""

    def __init__(self, shift_window: int = 32):
        self.shift_window = shift_window
        self.templates = None

    def fit(self, x, y):
        self.templates = train_centroid_baseline(np.asarray(x, dtype=float),
                                                 np.asarray(y))
        return self

    def predict(self, x):
        if self.templates is None:
            raise ConfigError("classifier is not fitted")
        scores = _shift_scores(np.asarray(x, dtype=float), self.templates,
                               self.shift_window)
        return np.argmax(scores, axis=1)


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    """Counts[true, predicted]."""
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(y_true), np.asarray(y_pred)), 1)
    return cm


def accuracy_of(cm: np.ndarray) -> float:
    return float(np.trace(cm) / cm.sum())


@dataclass
class CVResult:
    fold_confusions: list
    fold_accuracies: list

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.fold_accuracies))

    @property
    def std_accuracy(self) -> float:
        return float(np.std(self.fold_accuracies))

    @property
    def total_confusion(self) -> np.ndarray:
        return np.sum(self.fold_confusions, axis=0)


def run_cv(x: np.ndarray, y: np.ndarray, plan: FoldPlan, model) -> CVResult:
    """Fit/evaluate the model once per fold; every sample is tested exactly once."""
    y = np.asarray(y)
    n_classes = int(y.max()) + 1
    confusions, accuracies = [], []
    for f in range(plan.n_folds):
        test = plan.test_mask(f)
        model.fit(x[~test], y[~test])
        pred = np.asarray(model.predict(x[test]))
        cm = confusion_matrix(y[test], pred, n_classes)
        confusions.append(cm)
        accuracies.append(accuracy_of(cm))
    return CVResult(confusions, accuracies)


@dataclass
class SweepReport:
    """Per-cell, per-model CV accuracies plus aggregate views."""

    rows: list = field(default_factory=list)        # (cell, model, fold, accuracy)
    cells: list = field(default_factory=list)       # cell info dicts, grid order
    results: dict = field(default_factory=dict)     # (cell, model) -> CVResult
    plans: dict = field(default_factory=dict)       # cell -> FoldPlan

    def cell_accuracy(self, cell: str, model: str) -> float:
        return self.results[(cell, model)].mean_accuracy

    def grand_average(self, model: str) -> float:
        accs = [r.mean_accuracy for (c, m), r in self.results.items() if m == model]
        return float(np.mean(accs))

    def summary_lines(self):
        lines = []
        for info in self.cells:
            for model in sorted({m for (_, m) in self.results}):
                r = self.results[(info["cell"], model)]
                lines.append((info["cell"], model, r.mean_accuracy, r.std_accuracy))
        return lines


def sweep_report(cells, models: dict, n_folds: int = 10, seed: int = 0) -> SweepReport:
    """Run CV for every (cell, model) pair.

    cells: iterable of (cell_info_dict, x, y); cell_info must carry a
    unique "cell" key. All cells must share one label space.
    """
    report = SweepReport()
    n_label_spaces = set()
    for info, x, y in cells:
        report.cells.append(info)
        plan = make_folds(y, n_folds, seed)
        report.plans[info["cell"]] = plan
        n_label_spaces.add(int(np.max(y)) + 1)
        if len(n_label_spaces) > 1:
            raise ConfigError("cells disagree on the label space")
        for name, model in models.items():
            result = run_cv(x, y, plan, model)
            report.results[(info["cell"], name)] = result
            for f, acc in enumerate(result.fold_accuracies):
                report.rows.append((info["cell"], name, f, acc))
    return report


def dataset_cells(ds: LabeledDataset):
    """Split a dataset into evaluation cells (grid order), preprocessing each.

    Yields (cell_info, x, y) with preprocessing parameters taken from the
    manifest.
    """
    pp = ds.manifest.get("preprocess", {})
    smooth = pp.get("smooth_window", 9)
    anchor = pp.get("anchor_bin", ds.num_bins // 4)
    scen = ds.manifest["scenarios"]
    cell_of_sid = {s["scenario_id"]: s["cell"] for s in scen}
    order, seen = [], set()
    for s in scen:
        if s["cell"] not in seen:
            seen.add(s["cell"])
            order.append(s["cell"])
    sample_cells = np.array([cell_of_sid[sid] for sid in ds.scenario_ids])
    for cell in order:
        mask = sample_cells == cell
        if not mask.any():
            continue
        info = next(dict(s) for s in scen if s["cell"] == cell)
        info = {k: info[k] for k in ("cell", "snr", "distance_km", "noise_level",
                                     "n_pulses")}
        x = preprocess_matrix(ds.counts[mask], smooth, anchor)
        yield info, x, ds.labels[mask].astype(np.int64), mask


def evaluate_dataset(ds: LabeledDataset, models: dict | None = None,
                     n_folds: int = 10, seed: int = 0) -> SweepReport:
    """CV every condition cell of a generated dataset (folded per cell)."""
    if models is None:
        models = {"centroid": CentroidClassifier()}
    cells = [(info, x, y) for info, x, y, _ in dataset_cells(ds)]
    return sweep_report(cells, models, n_folds, seed)


def write_report(report: SweepReport, out_dir, ds: LabeledDataset | None = None):
    """Write report.tsv, summary.tsv, per-cell confusion CSVs and fold files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.tsv", "w", encoding="utf-8") as fh:
        fh.write("cell\tmodel\tfold\taccuracy\n")
        for cell, model, fold, acc in report.rows:
            fh.write(f"{cell}\t{model}\t{fold}\t{acc:.6f}\n")
    with open(out / "summary.tsv", "w", encoding="utf-8") as fh:
        fh.write("cell\tmodel\tmean_accuracy\tstd_accuracy\n")
        for cell, model, mean, std in report.summary_lines():
            fh.write(f"{cell}\t{model}\t{mean:.6f}\t{std:.6f}\n")
        for model in sorted({m for (_, m) in report.results}):
            fh.write(f"ALL\t{model}\t{report.grand_average(model):.6f}\t\n")
    for (cell, model), result in report.results.items():
        safe = cell.replace(",", "_").replace("=", "-")
        np.savetxt(out / f"confusion_{safe}_{model}.csv",
                   result.total_confusion, fmt="%d", delimiter=",")
    if ds is not None:
        write_fold_file(report, ds, out / "folds.tsv")
    return out


def write_fold_file(report: SweepReport, ds: LabeledDataset, path):
    """Fold assignments keyed by (cell, scenario_id, replicate_id).

    External classifiers consume this so that all models are compared on
    identical splits.
    """
    cell_of_sid = {s["scenario_id"]: s["cell"] for s in ds.manifest["scenarios"]}
    rows_by_cell = {}
    for i in range(len(ds)):
        cell = cell_of_sid[int(ds.scenario_ids[i])]
        rows_by_cell.setdefault(cell, []).append(i)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("cell\tscenario_id\treplicate_id\tfold\n")
        for cell, plan in report.plans.items():
            idx = rows_by_cell[cell]
            for local, i in enumerate(idx):
                fh.write(f"{cell}\t{ds.scenario_ids[i]}\t{ds.replicate_ids[i]}\t"
                         f"{plan.assignments[local]}\n")
    return path
