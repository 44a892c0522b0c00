"""Readers for the histogram dataset format and its evaluation sidecars.

This package deliberately reimplements the on-disk contracts (binary
records, CSV export, fold file, preprocessing) rather than importing the
generator, so the two sides can only drift apart loudly: the preprocessing
reimplementation is validated against golden vectors emitted by the
generator CLI.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


class DataFormatError(Exception):
    pass


def record_dtype(num_bins: int) -> np.dtype:
    return np.dtype([("scenario_id", "<u4"), ("replicate_id", "<u4"),
                     ("label", "<u2"), ("counts", "<u4", (num_bins,))])


def read_manifest(dataset_dir) -> dict:
    path = Path(dataset_dir) / "manifest.json"
    if not path.exists():
        raise DataFormatError(f"no manifest.json in {dataset_dir}")
    manifest = json.loads(path.read_text(encoding="utf-8"))
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise DataFormatError(
            f"unsupported schema_version {manifest.get('schema_version')!r}")
    return manifest


class HistogramDataset:
    """A loaded dataset: counts matrix + per-sample identity + manifest."""

    def __init__(self, counts, labels, scenario_ids, replicate_ids, manifest):
        self.counts = counts
        self.labels = labels
        self.scenario_ids = scenario_ids
        self.replicate_ids = replicate_ids
        self.manifest = manifest
        self._cell_of_sid = {s["scenario_id"]: s["cell"]
                             for s in manifest["scenarios"]}

    def __len__(self):
        return self.counts.shape[0]

    @property
    def num_bins(self):
        return self.counts.shape[1]

    @property
    def num_classes(self):
        return len(self.manifest["label_map"])

    def cells(self):
        """Condition-cell keys in grid order."""
        seen, order = set(), []
        for s in self.manifest["scenarios"]:
            if s["cell"] not in seen:
                seen.add(s["cell"])
                order.append(s["cell"])
        return order

    def cell_info(self, cell: str) -> dict:
        for s in self.manifest["scenarios"]:
            if s["cell"] == cell:
                return s
        raise KeyError(cell)

    def cell_mask(self, cell: str) -> np.ndarray:
        cells = np.array([self._cell_of_sid[int(sid)] for sid in self.scenario_ids])
        return cells == cell

    def preprocess_params(self):
        pp = self.manifest.get("preprocess", {})
        return pp.get("smooth_window", 9), pp.get("anchor_bin", self.num_bins // 4)


def load_dataset(dataset_dir) -> HistogramDataset:
    """Read manifest + binary payload, verifying length and checksum."""
    manifest = read_manifest(dataset_dir)
    payload = (Path(dataset_dir) / "samples.bin").read_bytes()
    dtype = record_dtype(manifest["num_bins"])
    expected = manifest["sample_count"] * dtype.itemsize
    if len(payload) != expected:
        raise DataFormatError(
            f"payload is {len(payload)} bytes, manifest implies {expected}")
    if hashlib.sha256(payload).hexdigest() != manifest.get("payload_sha256"):
        raise DataFormatError("payload checksum mismatch")
    rec = np.frombuffer(payload, dtype=dtype)
    return HistogramDataset(rec["counts"].copy(), rec["label"].astype(np.int64),
                            rec["scenario_id"].astype(np.int64),
                            rec["replicate_id"].astype(np.int64), manifest)


def load_csv(csv_path, manifest: dict | None = None) -> HistogramDataset:
    """Read the CSV export: label,scenario_id,replicate_id,c0..c{K-1}."""
    path = Path(csv_path)
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header[:3] != ["label", "scenario_id", "replicate_id"]:
            raise DataFormatError(f"unexpected CSV header in {csv_path}")
        data = np.loadtxt(fh, delimiter=",", dtype=np.int64, ndmin=2)
    if manifest is None:
        manifest = read_manifest(path.parent)
    return HistogramDataset(data[:, 3:].astype(np.uint32), data[:, 0],
                            data[:, 1], data[:, 2], manifest)


def read_fold_file(path) -> dict:
    """folds.tsv -> {cell: {(scenario_id, replicate_id): fold}}."""
    plans: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split("\t")
        if header != ["cell", "scenario_id", "replicate_id", "fold"]:
            raise DataFormatError(f"unexpected fold-file header in {path}")
        for line in fh:
            cell, sid, rid, fold = line.rstrip("\n").split("\t")
            plans.setdefault(cell, {})[(int(sid), int(rid))] = int(fold)
    return plans


def fold_assignments(plans: dict, ds: HistogramDataset, cell: str,
                     mask: np.ndarray) -> np.ndarray:
    """Per-sample fold indices for one cell, aligned with mask order."""
    table = plans[cell]
    idx = np.flatnonzero(mask)
    out = np.empty(idx.shape[0], dtype=np.int64)
    for j, i in enumerate(idx):
        key = (int(ds.scenario_ids[i]), int(ds.replicate_ids[i]))
        if key not in table:
            raise DataFormatError(f"fold file lacks sample {key} of cell {cell}")
        out[j] = table[key]
    return out


# ------------------------------------------------------------ preprocessing
# Reimplemented from the documented contract; see the generator README.
# Parity against generator-emitted golden vectors is enforced in tests.

def _canonical_peak(counts: np.ndarray, smooth_window: int) -> int:
    c = counts.astype(np.int64)
    half = smooth_window // 2
    s = sum(np.roll(c, -j) for j in range(-half, smooth_window - half))
    cand = np.flatnonzero(s == s.max())
    if cand.shape[0] > 1:
        raw = c[cand]
        cand = cand[raw == raw.max()]
    if cand.shape[0] > 1:
        keys = [np.concatenate([np.roll(s, -p), np.roll(c, -p)]).astype(">i8").tobytes()
                for p in cand]
        return int(cand[keys.index(max(keys))])
    return int(cand[0])


def preprocess(counts: np.ndarray, smooth_window: int = 9,
               anchor_bin: int | None = None) -> np.ndarray:
    """Shift-invariant normalized vector (matches the generator contract)."""
    c = np.asarray(counts).astype(np.int64)
    k = c.shape[0]
    anchor = k // 4 if anchor_bin is None else anchor_bin
    peak_max = c.max()
    if peak_max == 0:
        return np.zeros(k)
    p = _canonical_peak(c, smooth_window)
    return np.roll(c, anchor - p) / float(peak_max)


def preprocess_matrix(counts: np.ndarray, smooth_window: int = 9,
                      anchor_bin: int | None = None) -> np.ndarray:
    return np.stack([preprocess(row, smooth_window, anchor_bin) for row in counts])


def check_golden(golden_npz, atol: float = 1e-6) -> float:
    """Max abs deviation of this preprocessing vs a golden-vector file."""
    g = np.load(golden_npz)
    got = preprocess_matrix(g["counts"], int(g["smooth_window"]),
                            int(g["anchor_bin"]))
    worst = float(np.max(np.abs(got - g["preprocessed"])))
    if worst > atol:
        raise DataFormatError(
            f"preprocessing parity failure: max deviation {worst:.3g} > {atol}")
    return worst
