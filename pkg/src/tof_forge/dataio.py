"""Portable dataset format: manifest.json + samples.bin (+ CSV export).

The binary payload is little-endian, one fixed-size record per sample:
u32 scenario_id, u32 replicate_id, u16 label, then u32 counts for every
bin. The manifest carries the schema version, the generation parameters,
the label map and a sha256 of the payload; readers verify version, length
and checksum (in that order) before touching any record.
"""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import (DatasetFormatError, PayloadChecksumError,
                     SchemaVersionError, TruncatedPayloadError)
from .forge import SCHEMA_VERSION, LabeledDataset, preprocess_matrix

MANIFEST_NAME = "manifest.json"
PAYLOAD_NAME = "samples.bin"
CSV_NAME = "samples.csv"


def record_dtype(num_bins: int) -> np.dtype:
    return np.dtype([("scenario_id", "<u4"), ("replicate_id", "<u4"),
                     ("label", "<u2"), ("counts", "<u4", (num_bins,))])


def pack_records(counts, labels, scenario_ids, replicate_ids) -> bytes:
    rec = np.empty(counts.shape[0], dtype=record_dtype(counts.shape[1]))
    rec["scenario_id"] = scenario_ids
    rec["replicate_id"] = replicate_ids
    rec["label"] = labels
    rec["counts"] = counts
    return rec.tobytes()


def _dump_manifest(manifest: dict, path: Path):
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def write_dataset(ds: LabeledDataset, path, reproducible: bool = False) -> Path:
    """Write manifest + payload into a directory (created if needed).

    Updates ds.manifest in place with the payload checksum (and a creation
    timestamp unless reproducible), so read_dataset(path) == ds afterwards.
    """
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    payload = pack_records(ds.counts, ds.labels, ds.scenario_ids, ds.replicate_ids)
    (out / PAYLOAD_NAME).write_bytes(payload)
    ds.manifest["payload_sha256"] = hashlib.sha256(payload).hexdigest()
    ds.manifest.pop("created_at", None)
    if not reproducible:
        ds.manifest["created_at"] = datetime.now(timezone.utc).isoformat()
    _dump_manifest(ds.manifest, out / MANIFEST_NAME)
    return out


class StreamingDatasetWriter:
    """Incremental writer used by generation so big grids never sit in RAM.

    Records must arrive in their final order; close() fills in the checksum
    and sample count and writes the manifest.
    """

    def __init__(self, path, manifest: dict, reproducible: bool = False):
        self.path = Path(path)
        self.path.mkdir(parents=True, exist_ok=True)
        self.manifest = manifest
        self.reproducible = reproducible
        self._hash = hashlib.sha256()
        self._count = 0
        self._fh = open(self.path / PAYLOAD_NAME, "wb")

    def append_block(self, counts, labels, scenario_ids, replicate_ids):
        chunk = pack_records(counts, labels, scenario_ids, replicate_ids)
        self._fh.write(chunk)
        self._hash.update(chunk)
        self._count += counts.shape[0]

    def close(self):
        self._fh.close()
        self.manifest["sample_count"] = self._count
        self.manifest["payload_sha256"] = self._hash.hexdigest()
        self.manifest.pop("created_at", None)
        if not self.reproducible:
            self.manifest["created_at"] = datetime.now(timezone.utc).isoformat()
        _dump_manifest(self.manifest, self.path / MANIFEST_NAME)

    def abort(self):
        self._fh.close()
        (self.path / PAYLOAD_NAME).unlink(missing_ok=True)


def read_manifest(path) -> dict:
    p = Path(path) / MANIFEST_NAME
    if not p.exists():
        raise DatasetFormatError(f"no {MANIFEST_NAME} in {path}")
    manifest = json.loads(p.read_text(encoding="utf-8"))
    version = manifest.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(
            f"unsupported schema_version {version!r} (reader supports {SCHEMA_VERSION})")
    return manifest


def payload_sha256(path) -> str:
    """Streaming sha256 of the payload file."""
    h = hashlib.sha256()
    with open(Path(path) / PAYLOAD_NAME, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def read_dataset(path) -> LabeledDataset:
    """Load a dataset directory, verifying version, length and checksum."""
    manifest = read_manifest(path)
    num_bins = manifest["num_bins"]
    n = manifest["sample_count"]
    payload_path = Path(path) / PAYLOAD_NAME
    if not payload_path.exists():
        raise TruncatedPayloadError(f"missing {PAYLOAD_NAME}")
    blob = payload_path.read_bytes()
    expected = n * record_dtype(num_bins).itemsize
    if len(blob) < expected:
        raise TruncatedPayloadError(
            f"payload holds {len(blob)} bytes, manifest implies {expected}")
    if len(blob) > expected:
        raise DatasetFormatError(
            f"payload holds {len(blob)} bytes, manifest implies {expected}")
    digest = hashlib.sha256(blob).hexdigest()
    if digest != manifest.get("payload_sha256"):
        raise PayloadChecksumError("payload sha256 does not match manifest")
    rec = np.frombuffer(blob, dtype=record_dtype(num_bins))
    return LabeledDataset(rec["counts"].copy(), rec["label"].copy(),
                          rec["scenario_id"].copy(), rec["replicate_id"].copy(),
                          manifest)


def export_csv(ds: LabeledDataset, path) -> Path:
    """Write the optional CSV view: label,scenario_id,replicate_id,c0..c{K-1}."""
    out = Path(path)
    header = "label,scenario_id,replicate_id," + ",".join(
        f"c{i}" for i in range(ds.num_bins))
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for i in range(len(ds)):
            row = ds.counts[i]
            fh.write(f"{ds.labels[i]},{ds.scenario_ids[i]},{ds.replicate_ids[i]},"
                     + ",".join(map(str, row)) + "\n")
    return out


def write_golden_vectors(ds: LabeledDataset, path, count: int = 100) -> Path:
    """Emit a parity file: raw counts + expected preprocessed vectors.

    Samples are taken evenly across the dataset so every condition shows
    up. External reimplementations of the preprocessing check themselves
    against this file.
    """
    n = min(count, len(ds))
    idx = np.linspace(0, len(ds) - 1, n).astype(int)
    pp = ds.manifest.get("preprocess", {})
    smooth = pp.get("smooth_window", 9)
    anchor = pp.get("anchor_bin", ds.num_bins // 4)
    vectors = preprocess_matrix(ds.counts[idx], smooth, anchor)
    out = Path(path)
    np.savez(out, counts=ds.counts[idx], preprocessed=vectors,
             smooth_window=smooth, anchor_bin=anchor,
             bin_width_ps=ds.manifest["bin_width_ps"])
    return out


def generate_to_dir(spec, path, workers: int = 1, keep_partial: bool = False,
                    reproducible: bool = False) -> Path:
    """Stream-generate a dataset grid straight to disk."""
    from .forge import build_manifest, iter_cell_counts

    skipped = []
    # geometry validation runs inside iter_cell_counts before anything is written
    blocks = iter_cell_counts(spec, workers=workers, keep_partial=keep_partial)
    writer = StreamingDatasetWriter(path, build_manifest(spec, 0), reproducible)
    try:
        for scenario, counts in blocks:
            if counts is None:
                skipped.append(scenario)
                continue
            r = counts.shape[0]
            writer.append_block(
                counts,
                np.full(r, scenario["label"], dtype=np.uint16),
                np.full(r, scenario["scenario_id"], dtype=np.uint32),
                np.arange(r, dtype=np.uint32))
        writer.manifest["skipped_cells"] = [s["scenario_id"] for s in skipped]
        writer.close()
    except Exception:
        writer.abort()
        raise
    return Path(path)
