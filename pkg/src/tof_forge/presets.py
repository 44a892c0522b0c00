"""Bundled dataset grids and the JSON config schema behind the CLI.

The two named presets mirror the standard synthetic grids: a comparison
grid (SNR x pulse count) and a distance grid (range x noise level x pulse
count), both over 18 poses with 100 replicates per cell. Config files are
strict: unknown keys anywhere are rejected before any work starts.
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import ConfigError
from .forge import DEFAULT_MASTER_SEED, ScenarioSpec
from .linkbudget import SignalAnchor
from .photon import PulseModel
from .scene import MockDroneSpec, Pose

COMPARISON_SNR = (1.0, 0.1, 0.01, 0.005, 0.001)
DISTANCES_KM = (1.0, 3.0, 5.0, 6.25, 7.5, 8.75, 10.0)
NOISE_LEVELS = (0.005, 0.05, 0.1, 0.5, 1.0)
N_PULSES = (1_000_000, 100_000, 50_000, 25_000)

DEFAULT_THETA_X_DEG = (0.0, 30.0, 60.0)
DEFAULT_THETA_Z_DEG = (0.0, 60.0, 120.0, 180.0, 240.0, 300.0)


def default_pose_grid(theta_x_deg=DEFAULT_THETA_X_DEG,
                      theta_z_deg=DEFAULT_THETA_Z_DEG):
    """The 18-pose grid: every (theta_x, theta_z) combination, row-major."""
    poses, names = [], []
    for tx in theta_x_deg:
        for tz in theta_z_deg:
            poses.append(Pose.from_degrees(tx, tz))
            names.append(f"thx{int(round(tx)):03d}_thz{int(round(tz)):03d}")
    return tuple(poses), tuple(names)


def comparison_spec(seed: int | None = None, **overrides) -> ScenarioSpec:
    """SNR-sweep grid: 18 poses x 5 SNRs x 4 pulse counts x 100 replicates."""
    poses, names = default_pose_grid()
    kwargs = dict(
        dataset_kind="comparison", poses=poses, pose_names=names,
        snr_list=COMPARISON_SNR, n_pulses_list=N_PULSES,
        master_seed=DEFAULT_MASTER_SEED if seed is None else seed,
    )
    kwargs.update(overrides)
    return ScenarioSpec(**kwargs)


def distance_spec(seed: int | None = None, **overrides) -> ScenarioSpec:
    """Range-sweep grid: 18 poses x 7 distances x 5 noise levels x 4 pulse counts."""
    poses, names = default_pose_grid()
    kwargs = dict(
        dataset_kind="distance", poses=poses, pose_names=names,
        distances_km=DISTANCES_KM, noise_levels=NOISE_LEVELS,
        n_pulses_list=N_PULSES,
        master_seed=DEFAULT_MASTER_SEED if seed is None else seed,
    )
    kwargs.update(overrides)
    return ScenarioSpec(**kwargs)


PRESETS = {"comparison": comparison_spec, "distance": distance_spec}


def _require_keys(section: dict, allowed: set, where: str):
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")


def _drone_from_config(entry: dict) -> tuple[MockDroneSpec, str]:
    allowed = {"name", "body", "arm_lengths", "rotor_radii", "rotor_lifts",
               "arm_jitter", "total_points", "parts", "seed"}
    _require_keys(entry, allowed, "scene.drones[]")
    name = entry.get("name", "drone0")
    kwargs = {k: (tuple(v) if isinstance(v, list) else v)
              for k, v in entry.items() if k != "name"}
    return MockDroneSpec(**kwargs), name


def spec_from_config(config: dict) -> ScenarioSpec:
    """Build a ScenarioSpec from a parsed config mapping (strict keys)."""
    top_allowed = {"kind", "seed", "replicates", "num_bins", "bin_width_ps",
                   "anchor_bin", "snr_list", "distances_km", "noise_levels",
                   "n_pulses_list", "range_km", "detector", "pulse",
                   "signal_anchor", "scene", "label_mode", "preprocess"}
    if not isinstance(config, dict):
        raise ConfigError("config root must be a mapping")
    _require_keys(config, top_allowed, "config")
    kind = config.get("kind")
    if kind not in ("comparison", "distance", "custom"):
        raise ConfigError(f"config 'kind' must be comparison|distance|custom, got {kind!r}")

    det = config.get("detector", {})
    _require_keys(det, {"efficiency", "dead_time_ns"}, "detector")
    pul = config.get("pulse", {})
    _require_keys(pul, {"fwhm_pulse_ps", "fwhm_jitter_ps", "repetition_rate_hz"}, "pulse")
    anc = config.get("signal_anchor", {})
    _require_keys(anc, {"n_s", "d_km", "n_pulses"}, "signal_anchor")
    scn = config.get("scene", {})
    _require_keys(scn, {"poses", "view_axis", "anchor_bin", "drones"}, "scene")
    pp = config.get("preprocess", {})
    _require_keys(pp, {"smooth_window", "anchor_bin"}, "preprocess")

    pose_cfg = scn.get("poses", {})
    _require_keys(pose_cfg, {"theta_x_deg", "theta_z_deg"}, "scene.poses")
    poses, names = default_pose_grid(
        tuple(pose_cfg.get("theta_x_deg", DEFAULT_THETA_X_DEG)),
        tuple(pose_cfg.get("theta_z_deg", DEFAULT_THETA_Z_DEG)))

    drones, drone_names = (MockDroneSpec(),), ("drone0",)
    if "drones" in scn:
        pairs = [_drone_from_config(d) for d in scn["drones"]]
        drones = tuple(p[0] for p in pairs)
        drone_names = tuple(p[1] for p in pairs)

    kwargs = dict(
        dataset_kind=kind,
        poses=poses, pose_names=names,
        drones=drones, drone_names=drone_names,
        label_mode=config.get("label_mode", "pose"),
        replicates=config.get("replicates", 100),
        master_seed=config.get("seed", DEFAULT_MASTER_SEED),
        num_bins=config.get("num_bins", 1024),
        bin_width=config.get("bin_width_ps", 10.0) * 1e-12,
        anchor_bin=scn.get("anchor_bin", config.get("anchor_bin", 100)),
        view_axis=scn.get("view_axis", "+y"),
        detector_efficiency=det.get("efficiency", 0.25),
        dead_time=det.get("dead_time_ns", 900.0) * 1e-9,
        pulse=PulseModel(pul.get("fwhm_pulse_ps", 10.0) * 1e-12,
                         pul.get("fwhm_jitter_ps", 150.0) * 1e-12,
                         pul.get("repetition_rate_hz", 1e6)),
        signal_anchor=SignalAnchor(anc.get("n_s", 5000.0), anc.get("d_km", 5.0),
                                   anc.get("n_pulses", 1_000_000)),
        range_km=config.get("range_km", 5.0),
        smooth_window=pp.get("smooth_window", 9),
        preprocess_anchor=pp.get("anchor_bin"),
    )

    grid_defaults = {
        "comparison": dict(snr_list=COMPARISON_SNR, n_pulses_list=N_PULSES),
        "distance": dict(distances_km=DISTANCES_KM, noise_levels=NOISE_LEVELS,
                         n_pulses_list=N_PULSES),
        "custom": dict(),
    }[kind]
    for axis in ("snr_list", "distances_km", "noise_levels", "n_pulses_list"):
        if axis in config:
            kwargs[axis] = tuple(config[axis])
        elif axis in grid_defaults:
            kwargs[axis] = grid_defaults[axis]
    if "n_pulses_list" not in kwargs:
        kwargs["n_pulses_list"] = N_PULSES
    return ScenarioSpec(**kwargs)


def load_config(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
