"""Training loop: Adam + cross-entropy with optional early stopping.

Deterministic given the seed: weights are initialized and batches are
shuffled from torch generators seeded per run, data loading is in-process,
and no stochastic layers are used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn as nn

from .models import NetSpec, build_model


class DivergenceError(RuntimeError):
    """Training loss became non-finite."""


@dataclass(frozen=True)
class TrainSpec:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    batch_size: int = 128
    max_epochs: int = 300
    patience: int = 20          # early-stop patience on validation loss
    val_fraction: float = 0.1   # carved from the training set; 0 disables
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1 or self.learning_rate <= 0:
            raise ValueError("batch_size must be >= 1 and learning_rate > 0")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ValueError("val_fraction must lie in [0, 1)")


@dataclass
class TrainResult:
    model: nn.Module
    train_losses: list = field(default_factory=list)
    val_losses: list = field(default_factory=list)
    stopped_epoch: int = 0


def _to_tensors(x, y):
    tx = torch.as_tensor(np.asarray(x), dtype=torch.float32)
    if tx.ndim == 2:
        tx = tx.unsqueeze(1)
    ty = torch.as_tensor(np.asarray(y), dtype=torch.long)
    return tx, ty


def _stratified_val_split(y: np.ndarray, fraction: float, seed: int):
    rng = np.random.default_rng(seed)
    val_idx = []
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        rng.shuffle(idx)
        n_val = max(1, int(round(fraction * idx.shape[0])))
        val_idx.extend(idx[:n_val])
    mask = np.zeros(y.shape[0], dtype=bool)
    mask[np.array(val_idx)] = True
    return ~mask, mask


def train(net_spec: NetSpec, x, y, trainspec: TrainSpec = TrainSpec(),
          val=None) -> TrainResult:
    """Fit a fresh model on (x, y); returns the model plus loss history.

    x: (n, K) preprocessed vectors (or (n, 1, K)); y: integer labels.
    val: optional explicit (x_val, y_val) pair for early stopping (the
    field-style protocol provides a dedicated validation set); when absent,
    trainspec.val_fraction is carved from the training data instead.
    Raises DivergenceError if the loss goes non-finite.
    """
    torch.manual_seed(trainspec.seed)
    model = build_model(net_spec)
    x_all, y_all = _to_tensors(x, y)

    if val is not None:
        x_tr, y_tr = x_all, y_all
        x_val, y_val = _to_tensors(*val)
    elif trainspec.val_fraction > 0.0:
        tr_mask, val_mask = _stratified_val_split(
            np.asarray(y), trainspec.val_fraction, trainspec.seed)
        x_tr, y_tr = x_all[tr_mask], y_all[tr_mask]
        x_val, y_val = x_all[val_mask], y_all[val_mask]
    else:
        x_tr, y_tr = x_all, y_all
        x_val = y_val = None

    opt = torch.optim.Adam(model.parameters(), lr=trainspec.learning_rate,
                           betas=(trainspec.beta1, trainspec.beta2))
    loss_fn = nn.CrossEntropyLoss()
    shuffler = torch.Generator().manual_seed(trainspec.seed + 1)
    result = TrainResult(model)
    best_val, best_state, since_best = math.inf, None, 0

    for epoch in range(trainspec.max_epochs):
        model.train()
        order = torch.randperm(x_tr.shape[0], generator=shuffler)
        epoch_loss, n_batches = 0.0, 0
        for start in range(0, x_tr.shape[0], trainspec.batch_size):
            batch = order[start:start + trainspec.batch_size]
            opt.zero_grad()
            loss = loss_fn(model(x_tr[batch]), y_tr[batch])
            if not torch.isfinite(loss):
                raise DivergenceError(
                    f"loss became {loss.item()!r} at epoch {epoch}")
            loss.backward()
            opt.step()
            epoch_loss += float(loss.detach())
            n_batches += 1
        result.train_losses.append(epoch_loss / n_batches)
        result.stopped_epoch = epoch + 1

        if x_val is not None:
            model.eval()
            with torch.no_grad():
                val_loss = float(loss_fn(model(x_val), y_val))
            result.val_losses.append(val_loss)
            if val_loss < best_val - 1e-6:
                best_val, since_best = val_loss, 0
                best_state = {k: v.clone() for k, v in model.state_dict().items()}
            else:
                since_best += 1
                if since_best >= trainspec.patience:
                    break

    if best_state is not None:
        model.load_state_dict(best_state)
    model.eval()
    return result


def stratified_ratio_split(y, ratios=(2, 4, 4), seed: int = 0):
    """Stratified train/val/test masks in the given proportions.

    Largest-remainder allocation per class with at least one sample of
    every class in every part; used by the field-style protocol.
    """
    y = np.asarray(y)
    fractions = np.array([float(r) for r in ratios])
    if fractions.shape[0] != 3 or np.any(fractions <= 0):
        raise ValueError("ratios must be three positive numbers")
    fractions = fractions / fractions.sum()
    rng = np.random.default_rng(seed)
    masks = [np.zeros(y.shape[0], dtype=bool) for _ in range(3)]
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        if idx.shape[0] < 3:
            raise ValueError(f"class {cls} has fewer than 3 samples")
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
    return tuple(masks)


def predict(model: nn.Module, x, batch_size: int = 512) -> np.ndarray:
    """Argmax class predictions."""
    tx, _ = _to_tensors(x, np.zeros(len(x)))
    model.eval()
    out = []
    with torch.no_grad():
        for start in range(0, tx.shape[0], batch_size):
            out.append(model(tx[start:start + batch_size]).argmax(dim=1))
    return torch.cat(out).numpy()
