"""Exact reverse-mode gradients: dense stack, then backpropagation through
time over both LSTM layers."""
from __future__ import annotations

import numpy as np

from .loss import loss_batch
from .network import HIDDEN1, HIDDEN2, SEQ_LEN, forward_batch, zero_like_weights


def _lstm_backward(d_h_final, cache, w, u, hidden):
    """BPTT for one layer given the gradient of the final hidden state and,
    optionally, per-step hidden-state gradients (d_h_seq).

    d_h_final may be None when d_h_seq covers every step.
    Returns (dW, dU, db, d_x_seq).
    """
    d_h_final, d_h_seq = d_h_final
    bsz = cache[0][0].shape[0]
    dw = np.zeros_like(w)
    du = np.zeros_like(u)
    db = np.zeros(4 * hidden)
    d_x_seq = np.zeros((bsz, len(cache), w.shape[1]))

    dh = np.zeros((bsz, hidden)) if d_h_final is None else d_h_final.copy()
    dc = np.zeros((bsz, hidden))
    for t in reversed(range(len(cache))):
        if d_h_seq is not None:
            dh = dh + d_h_seq[:, t]
        x_t, h_prev, c_prev, i, f, g, o, c_new = cache[t]
        tc = np.tanh(c_new)
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc ** 2)
        di = dc * g
        df = dc * c_prev
        dg = dc * i
        dz = np.concatenate([
            di * i * (1.0 - i),
            df * f * (1.0 - f),
            dg * (1.0 - g ** 2),
            do * o * (1.0 - o),
        ], axis=1)
        dw += dz.T @ x_t
        du += dz.T @ h_prev
        db += dz.sum(axis=0)
        d_x_seq[:, t] = dz @ w
        dh = dz @ u
        dc = dc * f
    return dw, du, db, d_x_seq


def backward_from_output(d_out, cache, weights):
    """Gradient of a scalar objective w.r.t. every weight, given d(obj)/d(out)."""
    grads = zero_like_weights(weights)

    a3, a2, a1, h2 = cache["a3"], cache["a2"], cache["a1"], cache["h2"]
    grads["out_W"] = d_out.T @ a3
    grads["out_b"] = d_out.sum(axis=0)
    da3 = (d_out @ weights["out_W"]) * (a3 > 0)
    grads["fc3_W"] = da3.T @ a2
    grads["fc3_b"] = da3.sum(axis=0)
    da2 = (da3 @ weights["fc3_W"]) * (a2 > 0)
    grads["fc2_W"] = da2.T @ a1
    grads["fc2_b"] = da2.sum(axis=0)
    da1 = (da2 @ weights["fc2_W"]) * (a1 > 0)
    grads["fc1_W"] = da1.T @ h2
    grads["fc1_b"] = da1.sum(axis=0)
    dh2 = da1 @ weights["fc1_W"]

    dw2, du2, db2, d_h1_seq = _lstm_backward(
        (dh2, None), cache["cache2"], weights["lstm2_W"],
        weights["lstm2_U"], HIDDEN2)
    grads["lstm2_W"], grads["lstm2_U"], grads["lstm2_b"] = dw2, du2, db2

    dw1, du1, db1, _ = _lstm_backward(
        (None, d_h1_seq), cache["cache1"], weights["lstm1_W"],
        weights["lstm1_U"], HIDDEN1)
    grads["lstm1_W"], grads["lstm1_U"], grads["lstm1_b"] = dw1, du1, db1
    return grads


def loss_and_gradients(histories, v, delta, targets, weights, normalizer,
                       params, loss_weights=None, gamma=None):
    """Mean training loss over a batch and its gradient w.r.t. all weights.

    The chain runs through the bicycle-model loss head (loss.py) and the
    full network (dense stack + BPTT over the 10-step window).
    """
    kwargs = {}
    if loss_weights is not None:
        kwargs["weights"] = loss_weights
    if gamma is not None:
        kwargs["gamma"] = gamma
    out, cache = forward_batch(histories, weights, normalizer,
                               return_cache=True)
    mean_loss, d_out = loss_batch(out, v, delta, targets, params,
                                  return_grad=True, **kwargs)
    grads = backward_from_output(d_out, cache, weights)
    return mean_loss, grads
