import numpy as np
import pytest

from hebmplan.slipnet import (Normalizer, forward_batch, init_weights,
                              loss_and_gradients, predict_body_velocities)
from test_slipnet import random_history


def make_batch(rng, n, vparams, weights=None, self_consistent=False):
    norm = Normalizer.default()
    hists = np.stack([random_history(rng) for _ in range(n)])
    v = hists[:, -1, 3]
    delta = hists[:, -1, 4]
    if self_consistent:
        out = forward_batch(hists, weights, norm)
        vx, vy, pd, _ = predict_body_velocities(v, delta, out[:, 0],
                                                out[:, 1], vparams)
        targets = np.column_stack([vx, vy, pd])
    else:
        targets = rng.normal(size=(n, 3)) * [10, 1, 0.3]
    return hists, v, delta, targets, norm


def fd_check(weights, hists, v, delta, targets, norm, vparams, rng,
             n_coords=6, eps=1e-6):
    """Central finite differences on randomly chosen coordinates; returns
    the max floored relative error (floor guards against pure FD roundoff
    on near-zero-gradient coordinates)."""
    _, grads = loss_and_gradients(hists, v, delta, targets, weights, norm,
                                  vparams)
    g_max = max(np.max(np.abs(g)) for g in grads.values())
    worst = 0.0
    for key in weights:
        flat = weights[key].reshape(-1)
        gflat = grads[key].reshape(-1)
        idxs = rng.choice(flat.size, size=min(n_coords, flat.size),
                          replace=False)
        for i in idxs:
            orig = flat[i]
            flat[i] = orig + eps
            lp, _ = loss_and_gradients(hists, v, delta, targets, weights,
                                       norm, vparams)
            flat[i] = orig - eps
            lm, _ = loss_and_gradients(hists, v, delta, targets, weights,
                                       norm, vparams)
            flat[i] = orig
            fd = (lp - lm) / (2 * eps)
            denom = max(abs(fd), abs(gflat[i]), 1e-3 * g_max)
            worst = max(worst, abs(fd - gflat[i]) / denom)
    return worst


class TestGradients:
    def test_matches_finite_differences(self, vparams, rng):
        weights = init_weights(21)
        hists, v, delta, targets, norm = make_batch(rng, 4, vparams)
        assert fd_check(weights, hists, v, delta, targets, norm, vparams,
                        rng) < 1e-4

    def test_zero_loss_zero_gradient(self, vparams, rng):
        weights = init_weights(22)
        hists, v, delta, targets, norm = make_batch(
            rng, 6, vparams, weights=weights, self_consistent=True)
        loss, grads = loss_and_gradients(hists, v, delta, targets, weights,
                                         norm, vparams)
        assert loss == pytest.approx(0.0, abs=1e-12)
        for g in grads.values():
            assert np.all(g == 0.0)

    def test_batch_linearity(self, vparams, rng):
        """Gradient of the mean over a batch equals the mean of per-sample
        gradients."""
        weights = init_weights(23)
        hists, v, delta, targets, norm = make_batch(rng, 4, vparams)
        _, g_all = loss_and_gradients(hists, v, delta, targets, weights,
                                      norm, vparams)
        singles = [loss_and_gradients(hists[i:i + 1], v[i:i + 1],
                                      delta[i:i + 1], targets[i:i + 1],
                                      weights, norm, vparams)[1]
                   for i in range(4)]
        for key in g_all:
            mean_g = np.mean([s[key] for s in singles], axis=0)
            assert np.max(np.abs(g_all[key] - mean_g)) < 1e-12

    def test_loss_matches_forward_path(self, vparams, rng):
        """loss_and_gradients reports the same scalar as an independent
        forward + loss evaluation."""
        from hebmplan.slipnet import loss_batch
        weights = init_weights(24)
        hists, v, delta, targets, norm = make_batch(rng, 10, vparams)
        loss, _ = loss_and_gradients(hists, v, delta, targets, weights, norm,
                                     vparams)
        out = forward_batch(hists, weights, norm)
        direct = loss_batch(out, v, delta, targets, vparams)
        assert loss == pytest.approx(direct, abs=1e-12)
