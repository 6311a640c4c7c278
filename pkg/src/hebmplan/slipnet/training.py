"""Adam training loop with trajectory-level validation split and
best-validation checkpointing."""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from ..params import VehicleParams
from .gradients import loss_and_gradients
from .loss import GAMMA, LOSS_WEIGHTS, loss_batch
from .network import Normalizer, forward_batch, init_weights, zero_like_weights

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class DataInsufficient(ValueError):
    """Raised when the dataset holds fewer windows than one batch."""


@dataclass
class TrainingConfig:
    batch_size: int = 64
    learning_rate: float = 1e-4
    loss_weights: tuple = LOSS_WEIGHTS
    gamma: float = GAMMA
    epochs: int = 20
    seed: int = 0
    val_fraction: float = 0.1

    def __post_init__(self):
        if abs(sum(self.loss_weights) - 1.0) > 1e-9:
            raise ValueError("loss weights must sum to 1")
        if self.gamma <= 0:
            raise ValueError("gamma must be > 0")


@dataclass
class TrainingReport:
    epochs: list = field(default_factory=list)  # (epoch, train_loss, val_loss)
    best_epoch: int = -1
    best_val_loss: float = np.inf
    baseline_val_loss: float = np.inf

    def save_csv(self, path):
        with open(path, "w") as fh:
            fh.write("epoch,train_loss,val_loss\n")
            for ep, tr, va in self.epochs:
                fh.write(f"{ep},{tr:.8f},{va:.8f}\n")


def adam_step(weights, grads, m, v, t, lr,
              beta1=ADAM_BETA1, beta2=ADAM_BETA2, eps=ADAM_EPS):
    """In-place Adam update with bias correction; returns weights."""
    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t
    for key in weights:
        g = grads[key]
        m[key] = beta1 * m[key] + (1.0 - beta1) * g
        v[key] = beta2 * v[key] + (1.0 - beta2) * g * g
        weights[key] = weights[key] - lr * (m[key] / bc1) / (
            np.sqrt(v[key] / bc2) + eps)
    return weights


def split_by_trajectory(traj_ids, val_fraction, rng):
    """Boolean validation mask over windows, split at trajectory granularity
    (windows within one trajectory are correlated)."""
    unique = np.unique(traj_ids)
    perm = rng.permutation(unique)
    n_val = max(1, int(round(val_fraction * len(unique))))
    val_set = set(perm[:n_val].tolist())
    return np.isin(traj_ids, list(val_set))


def evaluate(dataset, idx, weights, normalizer, params, config,
             batch: int = 4096) -> float:
    """Window-weighted mean loss over the indexed subset (forward only)."""
    total, count = 0.0, 0
    for lo in range(0, len(idx), batch):
        sel = idx[lo:lo + batch]
        out = forward_batch(dataset.histories[sel], weights, normalizer)
        loss = loss_batch(out, dataset.v_cmd(sel), dataset.delta_cmd(sel),
                          dataset.targets[sel], params,
                          weights=config.loss_weights, gamma=config.gamma)
        total += loss * len(sel)
        count += len(sel)
    return total / max(count, 1)


def zero_slip_baseline(dataset, idx, params, config) -> float:
    """Loss of always predicting zero slips (the kinematic-bicycle limit)."""
    zeros = np.zeros((len(idx), 2))
    return loss_batch(zeros, dataset.v_cmd(idx), dataset.delta_cmd(idx),
                      dataset.targets[idx], params,
                      weights=config.loss_weights, gamma=config.gamma)


def train(dataset, config: TrainingConfig, params: VehicleParams | None = None,
          log=None):
    """Train the slip predictor; returns (best weights, normalizer, report).

    Shuffles per epoch (seeded), iterates minibatches, logs per-epoch train
    and validation loss, and returns the best-validation weights.
    """
    params = params or VehicleParams()
    n = len(dataset)
    if n < config.batch_size:
        raise DataInsufficient(
            f"{n} windows < one batch of {config.batch_size}")

    rng = np.random.default_rng(config.seed)
    weights = init_weights(config.seed)
    normalizer = dataset.normalizer()
    m = zero_like_weights(weights)
    v = zero_like_weights(weights)

    val_mask = split_by_trajectory(dataset.traj_ids, config.val_fraction, rng)
    train_idx = np.flatnonzero(~val_mask)
    val_idx = np.flatnonzero(val_mask)
    if len(val_idx) == 0 or len(train_idx) < config.batch_size:
        raise DataInsufficient("not enough trajectories for a validation split")

    report = TrainingReport()
    report.baseline_val_loss = zero_slip_baseline(dataset, val_idx, params,
                                                  config)
    best_weights = copy.deepcopy(weights)
    step = 0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(train_idx)
        running = 0.0
        n_batches = 0
        for lo in range(0, len(order), config.batch_size):
            sel = order[lo:lo + config.batch_size]
            step += 1
            loss, grads = loss_and_gradients(
                dataset.histories[sel], dataset.v_cmd(sel),
                dataset.delta_cmd(sel), dataset.targets[sel],
                weights, normalizer, params,
                loss_weights=config.loss_weights, gamma=config.gamma)
            adam_step(weights, grads, m, v, step, config.learning_rate)
            running += loss
            n_batches += 1
        train_loss = running / n_batches
        val_loss = evaluate(dataset, val_idx, weights, normalizer, params,
                            config)
        report.epochs.append((epoch, train_loss, val_loss))
        if val_loss < report.best_val_loss:
            report.best_val_loss = val_loss
            report.best_epoch = epoch
            best_weights = copy.deepcopy(weights)
        if log is not None:
            log(f"epoch {epoch:3d}  train {train_loss:.5f}  "
                f"val {val_loss:.5f}  (baseline {report.baseline_val_loss:.5f})")
    return best_weights, normalizer, report
