import subprocess
import sys

import numpy as np

from conftest import SNR_CELL_EASY
from tofnet.data import load_dataset, read_fold_file
from tofnet.evalcv import evaluate_cv, write_report
from tofnet.models import small_spec
from tofnet.train import TrainSpec

QUICK = TrainSpec(batch_size=64, max_epochs=6, val_fraction=0.0, seed=0)


def test_row_accounting_and_report_files(snr_dataset, tmp_path):
    ds_dir, reports = snr_dataset
    ds = load_dataset(ds_dir)
    plans = read_fold_file(reports / "folds.tsv")
    specs = {a: small_spec(a, ds.num_bins, ds.num_classes)
             for a in ("resnet1d", "mlp3")}
    rep = evaluate_cv(ds, plans, specs, QUICK, cells=[SNR_CELL_EASY])
    assert len(rep.rows) == 1 * 2 * 5  # cells x models x folds
    for (cell, model), ev in rep.cells.items():
        assert ev.confusion.sum() == 18 * 16  # every sample tested once
        assert np.all(ev.confusion.sum(axis=1) == 16)
    out = write_report(rep, tmp_path / "reports")
    text = (out / "report.tsv").read_text().splitlines()
    assert text[0] == "cell\tmodel\tfold\taccuracy"
    assert len(text) == 1 + len(rep.rows)
    assert "ALL\tresnet1d" in (out / "summary.tsv").read_text()
    assert list(out.glob("confusion_*_resnet1d.csv"))


def test_same_folds_same_seed_identical_tables(snr_dataset, tmp_path):
    ds_dir, reports = snr_dataset
    ds = load_dataset(ds_dir)
    plans = read_fold_file(reports / "folds.tsv")
    spec = {"resnet1d": small_spec("resnet1d", ds.num_bins, ds.num_classes)}
    a = evaluate_cv(ds, plans, spec, QUICK, cells=[SNR_CELL_EASY])
    b = evaluate_cv(ds, plans, spec, QUICK, cells=[SNR_CELL_EASY])
    assert a.rows == b.rows
    write_report(a, tmp_path / "r1")
    write_report(b, tmp_path / "r2")
    assert ((tmp_path / "r1" / "report.tsv").read_text()
            == (tmp_path / "r2" / "report.tsv").read_text())


def test_resnet_beats_centroid_on_same_folds(snr_dataset):
    # baseline comparison on identical splits: the harness's report carries
    # the centroid's per-fold accuracies for the same fold file
    ds_dir, reports = snr_dataset
    ds = load_dataset(ds_dir)
    plans = read_fold_file(reports / "folds.tsv")
    centroid = []
    for line in (reports / "report.tsv").read_text().splitlines()[1:]:
        cell, model, fold, acc = line.split("\t")
        if cell == SNR_CELL_EASY and model == "centroid":
            centroid.append(float(acc))
    assert len(centroid) == 5
    spec = {"resnet1d": small_spec("resnet1d", ds.num_bins, ds.num_classes)}
    ts = TrainSpec(batch_size=64, max_epochs=80, patience=20,
                   val_fraction=0.15, seed=0)
    rep = evaluate_cv(ds, plans, spec, ts, cells=[SNR_CELL_EASY])
    ours = rep.cells[(SNR_CELL_EASY, "resnet1d")].mean_accuracy
    assert ours >= float(np.mean(centroid)), (ours, np.mean(centroid))
    print(f"[PASS] resnet {ours:.4f} >= centroid {np.mean(centroid):.4f} "
          f"on identical folds")


def test_cli_end_to_end(snr_dataset, tmp_path):
    ds_dir, reports = snr_dataset
    out = tmp_path / "cli_reports"
    proc = subprocess.run(
        [sys.executable, "-m", "tofnet.cli",
         "--arch", "mlp3", "--dataset", str(ds_dir),
         "--folds-file", str(reports / "folds.tsv"),
         "--cells", SNR_CELL_EASY, "--epochs", "6", "--val-fraction", "0",
         "--small", "--seed", "0", "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (out / "report.tsv").exists()
    assert (out / "summary.tsv").exists()


def test_cli_rejects_unknown_arch(snr_dataset, tmp_path):
    ds_dir, reports = snr_dataset
    proc = subprocess.run(
        [sys.executable, "-m", "tofnet.cli",
         "--arch", "transformer", "--dataset", str(ds_dir),
         "--folds-file", str(reports / "folds.tsv"),
         "--out", str(tmp_path / "x")],
        capture_output=True, text=True)
    assert proc.returncode == 2
