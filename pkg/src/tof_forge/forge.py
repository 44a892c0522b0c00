"""Dataset assembly: scenario grids -> labeled histogram datasets.

A ScenarioSpec describes a grid of cells (pose x condition); each cell is
simulated once through scene -> blur -> flux -> detection probability and
then sampled `replicates` times. Every (scenario, replicate) pair draws
from its own seeded RNG stream, so output is byte-identical regardless of
worker count or execution order.
"""

from __future__ import annotations

import dataclasses
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .errors import ConfigError, GenerationError, OutOfWindowError
from .linkbudget import SignalAnchor
from .photon import (DetectorModel, Histogram, PulseModel, deadtime_correct,
                     flux_profile, gaussian_blur, poisson_prob)
from .scene import (ImpulseResponse, MockDroneSpec, discretize_response,
                    first_return_window_start, make_mock_drone,
                    project_to_surfaces, rotate)

SCHEMA_VERSION = 1
DEFAULT_MASTER_SEED = 20250117

# spawn-key purpose tags keep RNG streams for different jobs disjoint
_TAG_SAMPLE = 0
_TAG_THIN = 1


@dataclass(frozen=True)
class CellCondition:
    """One point of the condition grid (everything except pose/type)."""

    n_pulses: int
    snr: float | None = None
    distance_km: float | None = None
    noise_level: float | None = None

    def key(self) -> str:
        parts = []
        if self.distance_km is not None:
            parts.append(f"d={self.distance_km:g}")
        if self.snr is not None:
            parts.append(f"snr={self.snr:g}")
        if self.noise_level is not None:
            parts.append(f"nl={self.noise_level:g}")
        parts.append(f"np={self.n_pulses}")
        return ",".join(parts)


@dataclass(frozen=True)
class ScenarioSpec:
    """Full description of a dataset grid and its physics parameters."""

    dataset_kind: str                      # comparison | distance | custom
    poses: tuple                           # tuple[Pose, ...]
    pose_names: tuple
    n_pulses_list: tuple
    snr_list: tuple | None = None
    distances_km: tuple | None = None
    noise_levels: tuple | None = None
    drones: tuple = (MockDroneSpec(),)
    drone_names: tuple = ("drone0",)
    label_mode: str = "pose"               # pose | type
    replicates: int = 100
    master_seed: int = DEFAULT_MASTER_SEED
    num_bins: int = 1024
    bin_width: float = 10e-12
    anchor_bin: int = 100
    view_axis: str = "+y"
    detector_efficiency: float = 0.25
    dead_time: float = 900e-9
    pulse: PulseModel = PulseModel(10e-12, 150e-12, 1e6)
    signal_anchor: SignalAnchor = SignalAnchor(5000.0, 5.0, 1_000_000)
    range_km: float = 5.0
    smooth_window: int = 9
    preprocess_anchor: int | None = None   # None -> num_bins // 4

    def __post_init__(self):
        if self.dataset_kind not in ("comparison", "distance", "custom"):
            raise ConfigError(f"unknown dataset_kind {self.dataset_kind!r}")
        if not self.poses or len(self.poses) != len(self.pose_names):
            raise ConfigError("poses and pose_names must be non-empty and aligned")
        if not self.drones or len(self.drones) != len(self.drone_names):
            raise ConfigError("drones and drone_names must be non-empty and aligned")
        if self.label_mode not in ("pose", "type"):
            raise ConfigError(f"unknown label_mode {self.label_mode!r}")
        if self.label_mode == "pose" and len(self.drones) != 1:
            raise ConfigError("pose labeling requires exactly one drone variant")
        if not self.n_pulses_list or any(n < 1 for n in self.n_pulses_list):
            raise ConfigError("n_pulses_list must be non-empty positive integers")
        if (self.snr_list is not None) == (self.noise_levels is not None):
            raise ConfigError("exactly one of snr_list / noise_levels must be set")
        if self.snr_list is not None and any(s <= 0 for s in self.snr_list):
            raise ConfigError("snr values must be > 0")
        if self.noise_levels is not None and any(v <= 0 for v in self.noise_levels):
            raise ConfigError("noise levels must be > 0")
        if self.distances_km is not None and any(d <= 0 for d in self.distances_km):
            raise ConfigError("distances must be > 0")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if self.num_bins < 1 or not 0 <= self.anchor_bin < self.num_bins:
            raise ConfigError("anchor_bin must lie inside the bin window")
        if not self.bin_width > 0:
            raise ConfigError("bin_width must be > 0")
        if not 0 < self.detector_efficiency <= 1:
            raise ConfigError("detector_efficiency must be in (0, 1]")
        if self.dead_time < 0:
            raise ConfigError("dead_time must be >= 0")
        if not self.range_km > 0:
            raise ConfigError("range_km must be > 0")
        if self.smooth_window < 1:
            raise ConfigError("smooth_window must be >= 1")

    @property
    def preprocess_anchor_bin(self) -> int:
        return self.num_bins // 4 if self.preprocess_anchor is None else self.preprocess_anchor

    def conditions(self):
        """Condition grid in canonical order."""
        dists = self.distances_km if self.distances_km is not None else (None,)
        if self.snr_list is not None:
            noise_axis = [("snr", s) for s in self.snr_list]
        else:
            noise_axis = [("noise_level", v) for v in self.noise_levels]
        out = []
        for d, (mode, v), n in itertools.product(dists, noise_axis, self.n_pulses_list):
            out.append(CellCondition(n_pulses=int(n), distance_km=d,
                                     snr=v if mode == "snr" else None,
                                     noise_level=v if mode == "noise_level" else None))
        return out

    def scenarios(self):
        """Flat scenario table: one entry per (drone, pose, condition) cell."""
        conds = self.conditions()
        rows = []
        sid = 0
        for di, pi, cond in itertools.product(range(len(self.drones)),
                                              range(len(self.poses)), conds):
            label = pi if self.label_mode == "pose" else di
            n_s = self.signal_anchor.per_pulse * cond.n_pulses
            if cond.distance_km is not None:
                n_s *= (self.signal_anchor.d_km / cond.distance_km) ** 2
            if cond.snr is not None:
                n_n = n_s / cond.snr
            else:
                n_n = cond.noise_level * cond.n_pulses
            rows.append({
                "scenario_id": sid, "label": label, "drone": di, "pose": pi,
                "pose_name": self.pose_names[pi],
                "distance_km": cond.distance_km, "snr": cond.snr,
                "noise_level": cond.noise_level, "n_pulses": cond.n_pulses,
                "n_s": n_s, "n_n": n_n, "cell": cond.key(),
            })
            sid += 1
        return rows

    def label_map(self):
        if self.label_mode == "pose":
            return {str(i): name for i, name in enumerate(self.pose_names)}
        return {str(i): name for i, name in enumerate(self.drone_names)}

    def sample_count(self) -> int:
        return len(self.drones) * len(self.poses) * len(self.conditions()) * self.replicates


def sample_rng(master_seed: int, scenario_id: int, replicate_id: int) -> np.random.Generator:
    """Independent, reproducible stream for one (scenario, replicate) pair."""
    return np.random.default_rng(np.random.SeedSequence(
        master_seed, spawn_key=(_TAG_SAMPLE, scenario_id, replicate_id)))


def cell_response(spec: ScenarioSpec, drone_idx: int, pose_idx: int,
                  distance_km: float | None) -> np.ndarray:
    """Unit-mass blurred impulse response for one geometry cell.

    The window is anchored so the first return lands at spec.anchor_bin;
    raises OutOfWindowError when the posed target does not fit.
    """
    cloud = make_mock_drone(spec.drones[drone_idx])
    posed = rotate(cloud, spec.poses[pose_idx])
    range_m = (distance_km if distance_km is not None else spec.range_km) * 1000.0
    surf = project_to_surfaces(posed, range_m, spec.view_axis)
    wstart = first_return_window_start(surf, spec.bin_width, spec.anchor_bin)
    h = discretize_response(surf, spec.num_bins, spec.bin_width, wstart)
    e = gaussian_blur(h, spec.pulse)
    return e.bins / e.bins.sum()


def detection_profile_for_cell(spec: ScenarioSpec, e_norm: np.ndarray,
                               scenario: dict) -> np.ndarray:
    """Per-pulse detection probabilities P(k) for one scenario cell."""
    n_pulses = scenario["n_pulses"]
    b_per_bin = scenario["n_n"] / (n_pulses * spec.num_bins)
    det = DetectorModel(efficiency=spec.detector_efficiency, dead_time=spec.dead_time,
                        bin_width=spec.bin_width, noise_per_bin=b_per_bin)
    signal_scale = (scenario["n_s"] / n_pulses) / det.efficiency
    e = ImpulseResponse(e_norm, spec.bin_width)
    flux = flux_profile(e, det, signal_scale)
    return deadtime_correct(poisson_prob(flux), det.dead_bins).probs


def _sample_cell(args):
    """Worker task: sample all replicates of one scenario. Top level for pickling."""
    sid, probs, n_pulses, replicates, master_seed = args
    out = np.empty((replicates, probs.shape[0]), dtype=np.uint32)
    for r in range(replicates):
        rng = sample_rng(master_seed, sid, r)
        out[r] = rng.binomial(n_pulses, probs)
    return sid, out


def prepare_cells(spec: ScenarioSpec, keep_partial: bool = False):
    """Validate geometry and derive per-cell detection profiles.

    Returns (tasks, skipped_scenarios). Raises GenerationError up front when
    any geometry cell is out of window and keep_partial is False, so callers
    can abort before writing anything.
    """
    scenarios = spec.scenarios()
    geom_keys = sorted({(s["drone"], s["pose"], s["distance_km"]) for s in scenarios},
                       key=lambda t: (t[0], t[1], t[2] if t[2] is not None else -1.0))
    responses, errors = {}, []
    for di, pi, dkm in geom_keys:
        try:
            responses[(di, pi, dkm)] = cell_response(spec, di, pi, dkm)
        except OutOfWindowError as exc:
            errors.append((di, pi, dkm, str(exc)))
    if errors and not keep_partial:
        lines = [f"drone {d} pose {p} distance {km}: {msg}" for d, p, km, msg in errors]
        raise GenerationError(
            f"{len(errors)} geometry cell(s) fall outside the histogram window:\n"
            + "\n".join(lines), cell_errors=errors)
    bad_geom = {(d, p, km) for d, p, km, _ in errors}

    tasks, skipped = [], []
    for s in scenarios:
        gk = (s["drone"], s["pose"], s["distance_km"])
        if gk in bad_geom:
            skipped.append(s)
            continue
        probs = detection_profile_for_cell(spec, responses[gk], s)
        tasks.append((s, probs))
    return tasks, skipped


def iter_cell_counts(spec: ScenarioSpec, workers: int = 1, keep_partial: bool = False):
    """Iterator of (scenario, (replicates, K) uint32 counts) in scenario order.

    Geometry validation happens eagerly at call time (see prepare_cells);
    skipped cells are yielded last with counts None.
    """
    tasks, skipped = prepare_cells(spec, keep_partial)
    payloads = [(s["scenario_id"], probs, s["n_pulses"], spec.replicates,
                 spec.master_seed) for s, probs in tasks]

    def results():
        if workers <= 1:
            for (s, _), payload in zip(tasks, payloads):
                yield s, _sample_cell(payload)[1]
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                chunk = max(1, len(payloads) // (workers * 4))
                for (s, _), (_, counts) in zip(
                        tasks, pool.map(_sample_cell, payloads, chunksize=chunk)):
                    yield s, counts
        for s in skipped:
            yield s, None

    return results()


def _jsonify(obj):
    """Recursively coerce to JSON-native types so manifests round-trip as-is."""
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def build_manifest(spec: ScenarioSpec, sample_count: int, skipped=()) -> dict:
    """Manifest dictionary (checksum and timestamp are added at write time)."""
    return _jsonify({
        "schema_version": SCHEMA_VERSION,
        "generator": {"name": "tof-forge", "version": __version__},
        "dataset_kind": spec.dataset_kind,
        "master_seed": spec.master_seed,
        "num_bins": spec.num_bins,
        "bin_width_ps": spec.bin_width * 1e12,
        "replicates": spec.replicates,
        "sample_count": sample_count,
        "label_mode": spec.label_mode,
        "label_map": spec.label_map(),
        "grid": {
            "snr_list": list(spec.snr_list) if spec.snr_list else None,
            "distances_km": list(spec.distances_km) if spec.distances_km else None,
            "noise_levels": list(spec.noise_levels) if spec.noise_levels else None,
            "n_pulses_list": [int(n) for n in spec.n_pulses_list],
            "range_km": spec.range_km,
        },
        "detector": {"efficiency": spec.detector_efficiency,
                     "dead_time_ns": spec.dead_time * 1e9},
        "pulse": {"fwhm_pulse_ps": spec.pulse.fwhm_pulse * 1e12,
                  "fwhm_jitter_ps": spec.pulse.fwhm_jitter * 1e12,
                  "repetition_rate_hz": spec.pulse.repetition_rate},
        "signal_anchor": {"n_s": spec.signal_anchor.n_s,
                          "d_km": spec.signal_anchor.d_km,
                          "n_pulses": spec.signal_anchor.n_pulses},
        "scene": {
            "view_axis": spec.view_axis,
            "anchor_bin": spec.anchor_bin,
            "poses": [{"name": n, "theta_x": p.theta_x, "theta_z": p.theta_z}
                      for n, p in zip(spec.pose_names, spec.poses)],
            "drones": [dict(dataclasses.asdict(d), name=nm)
                       for d, nm in zip(spec.drones, spec.drone_names)],
        },
        "preprocess": {"smooth_window": spec.smooth_window,
                       "anchor_bin": spec.preprocess_anchor_bin},
        "scenarios": spec.scenarios(),
        "skipped_cells": [s["scenario_id"] for s in skipped],
    })


@dataclass(eq=False)
class LabeledDataset:
    """In-memory dataset: count matrix plus per-sample identity and manifest."""

    counts: np.ndarray          # (n, K) uint32
    labels: np.ndarray          # (n,) uint16
    scenario_ids: np.ndarray    # (n,) uint32
    replicate_ids: np.ndarray   # (n,) uint32
    manifest: dict

    def __post_init__(self):
        n = self.counts.shape[0]
        if any(a.shape != (n,) for a in (self.labels, self.scenario_ids,
                                         self.replicate_ids)):
            raise ConfigError("per-sample arrays must align with counts")
        if self.manifest.get("sample_count") != n:
            raise ConfigError("manifest sample_count disagrees with record count")

    def __len__(self):
        return self.counts.shape[0]

    @property
    def num_bins(self):
        return self.counts.shape[1]

    @property
    def bin_width(self):
        return self.manifest["bin_width_ps"] * 1e-12

    def n_pulses_of(self, i: int) -> int:
        return self.manifest["scenarios"][int(self.scenario_ids[i])]["n_pulses"]

    def histogram(self, i: int) -> Histogram:
        return Histogram(self.counts[i].astype(np.int64), self.bin_width,
                         self.n_pulses_of(i))

    def cell_of(self, i: int) -> str:
        return self.manifest["scenarios"][int(self.scenario_ids[i])]["cell"]

    def __eq__(self, other):
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return (np.array_equal(self.counts, other.counts)
                and np.array_equal(self.labels, other.labels)
                and np.array_equal(self.scenario_ids, other.scenario_ids)
                and np.array_equal(self.replicate_ids, other.replicate_ids)
                and self.manifest == other.manifest)


def generate(spec: ScenarioSpec, workers: int = 1,
             keep_partial: bool = False) -> LabeledDataset:
    """Generate the full grid in memory. See iter_cell_counts for streaming."""
    n_total = spec.sample_count()
    counts = np.empty((n_total, spec.num_bins), dtype=np.uint32)
    labels = np.empty(n_total, dtype=np.uint16)
    sids = np.empty(n_total, dtype=np.uint32)
    rids = np.empty(n_total, dtype=np.uint32)
    pos = 0
    skipped = []
    for scenario, block in iter_cell_counts(spec, workers=workers,
                                            keep_partial=keep_partial):
        if block is None:
            skipped.append(scenario)
            continue
        r = spec.replicates
        counts[pos:pos + r] = block
        labels[pos:pos + r] = scenario["label"]
        sids[pos:pos + r] = scenario["scenario_id"]
        rids[pos:pos + r] = np.arange(r)
        pos += r
    manifest = build_manifest(spec, pos, skipped)
    return LabeledDataset(counts[:pos], labels[:pos], sids[:pos], rids[:pos], manifest)


def thin(h: Histogram, ratio: float, rng: np.random.Generator) -> Histogram:
    """Binomial thinning: keep each recorded photon with probability ratio.

    ratio 1 returns the counts bit-identically (no RNG consumed); metadata
    (bin width, n_pulses) is unchanged.
    """
    if not 0.0 <= ratio <= 1.0:
        raise ConfigError(f"thinning ratio must lie in [0, 1], got {ratio}")
    if ratio == 1.0:
        return h
    counts = rng.binomial(h.counts, ratio)
    return Histogram(counts, h.bin_width, h.n_pulses)


def thin_dataset(ds: LabeledDataset, ratio: float, seed: int) -> LabeledDataset:
    """Thin every histogram with per-sample independent streams."""
    if not 0.0 <= ratio <= 1.0:
        raise ConfigError(f"thinning ratio must lie in [0, 1], got {ratio}")
    if ratio == 1.0:
        counts = ds.counts.copy()
    else:
        counts = np.empty_like(ds.counts)
        for i in range(len(ds)):
            rng = np.random.default_rng(np.random.SeedSequence(
                seed, spawn_key=(_TAG_THIN, int(ds.scenario_ids[i]),
                                 int(ds.replicate_ids[i]))))
            counts[i] = rng.binomial(ds.counts[i].astype(np.int64), ratio)
    manifest = dict(ds.manifest)
    manifest.pop("payload_sha256", None)
    manifest.pop("created_at", None)
    manifest["provenance"] = {
        "operation": "thin", "ratio": ratio, "seed": seed,
        "source_checksum": ds.manifest.get("payload_sha256"),
    }
    return LabeledDataset(counts, ds.labels.copy(), ds.scenario_ids.copy(),
                          ds.replicate_ids.copy(), manifest)


def smoothed_peak(counts: np.ndarray, smooth_window: int = 9) -> int:
    """Canonical peak bin of a histogram under circular smoothing.

    The peak is the argmax of the circular smooth_window moving sum.
    Ties are broken rotation-equivariantly: first by the raw count at the
    candidate bin, then by lexicographic comparison of the (smoothed, raw)
    sequences read circularly from each candidate, so that circularly
    shifted inputs always yield correspondingly shifted peaks.
    """
    c = np.asarray(counts, dtype=np.int64)
    half = smooth_window // 2
    s = sum(np.roll(c, -j) for j in range(-half, smooth_window - half))
    cand = np.flatnonzero(s == s.max())
    if cand.shape[0] > 1:
        raw = c[cand]
        cand = cand[raw == raw.max()]
    if cand.shape[0] > 1:
        keys = [np.concatenate([np.roll(s, -p), np.roll(c, -p)]).astype(">i8").tobytes()
                for p in cand]
        cand = [cand[keys.index(max(keys))]]
    return int(cand[0])


def preprocess(h, smooth_window: int = 9, anchor_bin: int | None = None) -> np.ndarray:
    """Shift-invariant normalized vector for classification.

    Circularly shifts the histogram so its smoothed peak lands on the
    anchor bin (default: K/4, bin 256 of a 1024-bin window), then divides
    by the maximum count. An all-zero histogram maps to all zeros. Output
    is identical for any circular shift of the input.
    """
    counts = h.counts if isinstance(h, Histogram) else np.asarray(h)
    counts = counts.astype(np.int64)
    k = counts.shape[0]
    anchor = k // 4 if anchor_bin is None else anchor_bin
    if not 0 <= anchor < k:
        raise ConfigError("anchor_bin must lie inside the window")
    peak_max = counts.max()
    if peak_max == 0:
        return np.zeros(k)
    p = smoothed_peak(counts, smooth_window)
    return np.roll(counts, anchor - p) / float(peak_max)


def preprocess_matrix(counts: np.ndarray, smooth_window: int = 9,
                      anchor_bin: int | None = None) -> np.ndarray:
    """Apply preprocess row-wise to a (n, K) count matrix."""
    return np.stack([preprocess(row, smooth_window, anchor_bin) for row in counts])
