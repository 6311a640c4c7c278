"""Slip-angle predictor: 2 LSTM layers (32, 64) + dense stack 128-256-128-2.

Everything is plain float64 numpy; forward passes cache intermediates for
exact backpropagation through time (see gradients.py). Weights are a dict
of arrays keyed by WEIGHT_KEYS; gate order inside stacked LSTM matrices is
(input, forget, cell, output).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SEQ_LEN = 10
INPUT_DIM = 5          # (Vx, Vy, psi_dot, V, delta) per time step
HIDDEN1 = 32
HIDDEN2 = 64
DENSE_DIMS = (128, 256, 128)
OUTPUT_DIM = 2         # (alpha_f, alpha_r)

# serialization / iteration order is fixed by this tuple
WEIGHT_KEYS = (
    "lstm1_W", "lstm1_U", "lstm1_b",
    "lstm2_W", "lstm2_U", "lstm2_b",
    "fc1_W", "fc1_b", "fc2_W", "fc2_b", "fc3_W", "fc3_b",
    "out_W", "out_b",
)

WEIGHT_SHAPES = {
    "lstm1_W": (4 * HIDDEN1, INPUT_DIM),
    "lstm1_U": (4 * HIDDEN1, HIDDEN1),
    "lstm1_b": (4 * HIDDEN1,),
    "lstm2_W": (4 * HIDDEN2, HIDDEN1),
    "lstm2_U": (4 * HIDDEN2, HIDDEN2),
    "lstm2_b": (4 * HIDDEN2,),
    "fc1_W": (DENSE_DIMS[0], HIDDEN2),
    "fc1_b": (DENSE_DIMS[0],),
    "fc2_W": (DENSE_DIMS[1], DENSE_DIMS[0]),
    "fc2_b": (DENSE_DIMS[1],),
    "fc3_W": (DENSE_DIMS[2], DENSE_DIMS[1]),
    "fc3_b": (DENSE_DIMS[2],),
    "out_W": (OUTPUT_DIM, DENSE_DIMS[2]),
    "out_b": (OUTPUT_DIM,),
}

# fallback input scaling before dataset statistics exist
DEFAULT_NORM_MEAN = np.zeros(INPUT_DIM)
DEFAULT_NORM_SCALE = np.array([30.0, 3.0, 1.0, 30.0, 0.5])


@dataclass
class Normalizer:
    """Per-channel affine input scaling: (x - mean) / scale."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def default(cls) -> "Normalizer":
        return cls(DEFAULT_NORM_MEAN.copy(), DEFAULT_NORM_SCALE.copy())

    @classmethod
    def from_stats(cls, mean, std) -> "Normalizer":
        scale = np.maximum(np.asarray(std, dtype=float), 1e-6)
        return cls(np.asarray(mean, dtype=float), scale)

    def apply(self, x):
        return (x - self.mean) / self.scale


def init_weights(seed: int) -> dict:
    """Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) per matrix, seeded."""
    rng = np.random.default_rng(seed)
    weights = {}
    for key in WEIGHT_KEYS:
        shape = WEIGHT_SHAPES[key]
        if key.endswith("_b"):
            weights[key] = np.zeros(shape)
        else:
            bound = 1.0 / np.sqrt(shape[1])
            weights[key] = rng.uniform(-bound, bound, size=shape)
    return weights


def zero_like_weights(weights: dict) -> dict:
    return {k: np.zeros_like(v) for k, v in weights.items()}


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _lstm_layer(x_seq, w, u, b, hidden):
    """Run one LSTM layer over a (B, T, D) sequence from zero initial state.

    Returns the final hidden state and the per-step cache needed for BPTT.
    """
    bsz, t_len, _ = x_seq.shape
    h = np.zeros((bsz, hidden))
    c = np.zeros((bsz, hidden))
    cache = []
    for t in range(t_len):
        z = x_seq[:, t] @ w.T + h @ u.T + b
        i = _sigmoid(z[:, 0 * hidden:1 * hidden])
        f = _sigmoid(z[:, 1 * hidden:2 * hidden])
        g = np.tanh(z[:, 2 * hidden:3 * hidden])
        o = _sigmoid(z[:, 3 * hidden:4 * hidden])
        c_new = f * c + i * g
        h_new = o * np.tanh(c_new)
        cache.append((x_seq[:, t], h, c, i, f, g, o, c_new))
        h, c = h_new, c_new
    return h, cache


def _lstm_layer_inference(x_seq, w, u, b, hidden, return_seq=False):
    """Cache-free LSTM pass: input projections for every step are batched
    into one matmul, gate activations are fused. Same math as _lstm_layer."""
    bsz, t_len, _ = x_seq.shape
    dt = w.dtype
    xz = x_seq.reshape(bsz * t_len, -1) @ w.T
    xz = xz.reshape(bsz, t_len, 4 * hidden) + b
    h = np.zeros((bsz, hidden), dtype=dt)
    c = np.zeros((bsz, hidden), dtype=dt)
    ut = np.ascontiguousarray(u.T)
    seq = np.empty((bsz, t_len, hidden), dtype=dt) if return_seq else None
    h2, h3 = 2 * hidden, 3 * hidden
    for t in range(t_len):
        z = xz[:, t] + h @ ut
        i_f = _sigmoid(z[:, :h2])
        g = np.tanh(z[:, h2:h3])
        o = _sigmoid(z[:, h3:])
        c = i_f[:, hidden:] * c + i_f[:, :hidden] * g
        h = o * np.tanh(c)
        if return_seq:
            seq[:, t] = h
    return h, seq


def forward_batch(histories, weights: dict, normalizer: Normalizer,
                  return_cache: bool = False):
    """Predict (alpha_f, alpha_r) for a batch of (B, 10, 5) history windows.

    Channels per step: (Vx, Vy, psi_dot, V, delta). Deterministic and
    read-only on all arguments. Arithmetic follows the precision of the
    weight arrays (float64 unless the caller pre-cast them).
    """
    x = np.asarray(histories, dtype=weights["lstm1_W"].dtype)
    if x.ndim == 2:
        x = x[None]
    if x.shape[1:] != (SEQ_LEN, INPUT_DIM):
        raise ValueError(f"history windows must be (B, {SEQ_LEN}, {INPUT_DIM})")
    xn = normalizer.apply(x)

    if not return_cache:
        _, h1_seq = _lstm_layer_inference(
            xn, weights["lstm1_W"], weights["lstm1_U"], weights["lstm1_b"],
            HIDDEN1, return_seq=True)
        h2, _ = _lstm_layer_inference(
            h1_seq, weights["lstm2_W"], weights["lstm2_U"], weights["lstm2_b"],
            HIDDEN2)
        a1 = np.maximum(h2 @ weights["fc1_W"].T + weights["fc1_b"], 0.0)
        a2 = np.maximum(a1 @ weights["fc2_W"].T + weights["fc2_b"], 0.0)
        a3 = np.maximum(a2 @ weights["fc3_W"].T + weights["fc3_b"], 0.0)
        return a3 @ weights["out_W"].T + weights["out_b"]

    h1, cache1 = _lstm_layer(xn, weights["lstm1_W"], weights["lstm1_U"],
                             weights["lstm1_b"], HIDDEN1)
    # second layer consumes the first layer's hidden-state sequence
    h1_seq = np.stack(
        [cache1[t][6] * np.tanh(cache1[t][7]) for t in range(SEQ_LEN)], axis=1)
    h2, cache2 = _lstm_layer(h1_seq, weights["lstm2_W"], weights["lstm2_U"],
                             weights["lstm2_b"], HIDDEN2)

    a1 = np.maximum(h2 @ weights["fc1_W"].T + weights["fc1_b"], 0.0)
    a2 = np.maximum(a1 @ weights["fc2_W"].T + weights["fc2_b"], 0.0)
    a3 = np.maximum(a2 @ weights["fc3_W"].T + weights["fc3_b"], 0.0)
    out = a3 @ weights["out_W"].T + weights["out_b"]

    cache = {"xn": xn, "cache1": cache1, "h1_seq": h1_seq,
             "cache2": cache2, "h2": h2, "a1": a1, "a2": a2, "a3": a3}
    return out, cache


def forward(history, weights: dict, normalizer: Normalizer):
    """Single-window convenience wrapper; returns a length-2 array."""
    return forward_batch(np.asarray(history)[None], weights, normalizer)[0]
