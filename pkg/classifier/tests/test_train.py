import numpy as np
import pytest
import torch

from tofnet.data import load_dataset, preprocess_matrix
from tofnet.models import small_spec
from tofnet.train import (DivergenceError, TrainSpec, predict,
                          stratified_ratio_split, train)


def spike_set(n_per_class=40, k=128, n_classes=2, noise=0.05, seed=0):
    rng = np.random.default_rng(seed)
    x = noise * rng.random((n_per_class * n_classes, k))
    y = np.repeat(np.arange(n_classes), n_per_class)
    for i, c in enumerate(y):
        x[i, 30 + 60 * c] += 1.0
    return x, y


def test_separable_toy_reaches_full_accuracy():
    x, y = spike_set()
    res = train(small_spec("resnet1d", 128, 2), x, y,
                TrainSpec(batch_size=16, max_epochs=50, val_fraction=0.0, seed=0))
    assert res.stopped_epoch <= 50
    acc = (predict(res.model, x) == y).mean()
    assert acc == 1.0


def test_one_batch_overfit():
    rng = np.random.default_rng(1)
    x = rng.random((32, 128))
    y = rng.integers(0, 4, size=32)
    res = train(small_spec("resnet1d", 128, 4), x, y,
                TrainSpec(batch_size=32, max_epochs=150, val_fraction=0.0, seed=0))
    assert res.train_losses[-1] < 0.1
    assert (predict(res.model, x) == y).mean() == 1.0


def test_training_is_deterministic():
    x, y = spike_set(noise=0.3)
    ts = TrainSpec(batch_size=16, max_epochs=12, val_fraction=0.0, seed=7)
    a = train(small_spec("resnet1d", 128, 2), x, y, ts)
    b = train(small_spec("resnet1d", 128, 2), x, y, ts)
    assert a.train_losses == b.train_losses
    assert np.array_equal(predict(a.model, x), predict(b.model, x))
    c = train(small_spec("resnet1d", 128, 2), x, y,
              TrainSpec(batch_size=16, max_epochs=12, val_fraction=0.0, seed=8))
    assert a.train_losses != c.train_losses


def test_divergence_aborts():
    x, y = spike_set()
    with pytest.raises(DivergenceError):
        train(small_spec("mlp3", 128, 2), 1e6 * x, y,
              TrainSpec(learning_rate=1e12, batch_size=16, max_epochs=20,
                        val_fraction=0.0, seed=0))


def test_early_stopping_triggers():
    x, y = spike_set()
    ts = TrainSpec(batch_size=16, max_epochs=300, patience=5,
                   val_fraction=0.2, seed=0)
    res = train(small_spec("mlp3", 128, 2), x, y, ts)
    assert res.stopped_epoch < 300
    assert len(res.val_losses) == res.stopped_epoch


def test_bad_trainspec_rejected():
    with pytest.raises(ValueError):
        TrainSpec(batch_size=0)
    with pytest.raises(ValueError):
        TrainSpec(val_fraction=1.0)


def test_stratified_ratio_split_partitions():
    y = np.repeat(np.arange(6), 50)
    tr, va, te = stratified_ratio_split(y, (2, 4, 4), seed=0)
    assert np.all(tr.astype(int) + va.astype(int) + te.astype(int) == 1)
    for cls in range(6):
        m = y == cls
        assert (tr & m).sum() == 10 and (va & m).sum() == 20 and (te & m).sum() == 20
    tr2, _, _ = stratified_ratio_split(y, (2, 4, 4), seed=0)
    assert np.array_equal(tr, tr2)


def test_field_style_protocol(snr_dataset):
    # dedicated validation set, 2:4:4 split, batch 32
    ds_dir, _ = snr_dataset
    ds = load_dataset(ds_dir)
    mask = ds.cell_mask("snr=1,np=1000000")
    smooth, anchor = ds.preprocess_params()
    x = preprocess_matrix(ds.counts[mask], smooth, anchor)
    y = ds.labels[mask]
    tr, va, te = stratified_ratio_split(y, (2, 4, 4), seed=0)
    ts = TrainSpec(batch_size=32, max_epochs=80, patience=20, seed=0)
    res = train(small_spec("resnet1d", ds.num_bins, ds.num_classes),
                x[tr], y[tr], ts, val=(x[va], y[va]))
    acc = float((predict(res.model, x[te]) == y[te]).mean())
    assert acc >= 0.8, acc
    assert len(res.val_losses) == res.stopped_epoch
    print(f"[PASS] field-style protocol: test accuracy {acc:.3f} on the "
          f"held-out 40% split")
