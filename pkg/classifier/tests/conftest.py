"""Shared fixtures: surrogate datasets built through the generator CLI.

The generator package is consumed strictly through its command-line
interface and on-disk formats; nothing here imports it.
"""

import json
import shutil
import subprocess
import sys

import pytest

SNR_CELL_EASY = "snr=1,np=1000000"
SNR_CELL_HARD = "snr=0.003,np=1000000"

SNR_CONFIG = {
    "kind": "custom", "seed": 20260801, "replicates": 16,
    "num_bins": 128, "bin_width_ps": 40.0,
    "snr_list": [1.0, 0.003], "n_pulses_list": [1000000],
    "scene": {"anchor_bin": 20},
}

DIST_CONFIG = {
    "kind": "distance", "seed": 20260802, "replicates": 16,
    "num_bins": 128, "bin_width_ps": 40.0,
    "noise_levels": [0.1], "n_pulses_list": [1000000],
    "scene": {"anchor_bin": 20},
}


def forge(*argv):
    """Invoke the generator CLI; falls back to module execution."""
    exe = shutil.which("tof-forge")
    cmd = [exe] if exe else [sys.executable, "-m", "tof_forge.cli"]
    proc = subprocess.run(cmd + [str(a) for a in argv],
                          capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(f"tof-forge {argv} failed:\n{proc.stderr}")
    return proc.stdout


@pytest.fixture(scope="session")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("tofnet_surrogates")


@pytest.fixture(scope="session")
def snr_dataset(workdir):
    """Two-cell SNR grid (easy + hard), with baseline folds and reports."""
    cfg = workdir / "snr.json"
    cfg.write_text(json.dumps(SNR_CONFIG))
    ds = workdir / "snr_ds"
    reports = workdir / "snr_reports"
    forge("gen", "--config", cfg, "--out", ds, "--reproducible")
    forge("eval", "--dataset", ds, "--out", reports, "--folds", "5", "--seed", "3")
    return ds, reports


@pytest.fixture(scope="session")
def distance_dataset(workdir):
    """Seven-distance grid at one noise level, with folds."""
    cfg = workdir / "dist.json"
    cfg.write_text(json.dumps(DIST_CONFIG))
    ds = workdir / "dist_ds"
    reports = workdir / "dist_reports"
    forge("gen", "--config", cfg, "--out", ds, "--reproducible")
    forge("eval", "--dataset", ds, "--out", reports, "--folds", "5", "--seed", "3")
    return ds, reports


@pytest.fixture(scope="session")
def thinned_datasets(workdir, snr_dataset):
    """Split-ratio ladder {1.0, 0.5, 0.1, 0.05} of the SNR dataset."""
    ds, _ = snr_dataset
    out = {1.0: ds}
    for ratio in (0.5, 0.1, 0.05):
        path = workdir / f"snr_thin_{ratio}"
        forge("thin", "--input", ds, "--ratio", str(ratio), "--seed", "1",
              "--out", path, "--reproducible")
        out[ratio] = path
    return out


@pytest.fixture(scope="session")
def golden_file(workdir, snr_dataset):
    ds, _ = snr_dataset
    path = workdir / "golden.npz"
    forge("golden", "--dataset", ds, "--out", path, "--count", "60")
    return path


@pytest.fixture(scope="session")
def csv_export(snr_dataset):
    ds, _ = snr_dataset
    path = ds / "samples.csv"  # canonical location, beside the manifest
    forge("export", "--dataset", ds, "--out", path)
    return ds, path
