import numpy as np
import pytest

from hebmplan.datagen import ExcitationPolicy, build_dataset
from hebmplan.slipnet import (DataInsufficient, TrainingConfig, init_weights,
                              adam_step, train, zero_like_weights)


@pytest.fixture(scope="module")
def small_dataset(vparams):
    # 12 trajectories -> 2280 windows; enough for smoke training
    return build_dataset(12, ExcitationPolicy(seed=99), vparams)


class TestAdam:
    def test_zero_gradient_no_update(self):
        w = init_weights(0)
        before = {k: v.copy() for k, v in w.items()}
        g = zero_like_weights(w)
        m = zero_like_weights(w)
        v = zero_like_weights(w)
        adam_step(w, g, m, v, 1, 1e-3)
        for k in w:
            assert np.array_equal(w[k], before[k])

    def test_constant_gradient_step_magnitude(self):
        """With a constant gradient the bias-corrected step approaches
        lr * sign(g)."""
        w = {"p": np.zeros(3)}
        g = {"p": np.array([1.0, -2.0, 0.5])}
        m = {"p": np.zeros(3)}
        v = {"p": np.zeros(3)}
        lr = 1e-2
        prev = w["p"].copy()
        for t in range(1, 200):
            adam_step(w, g, m, v, t, lr)
            step = w["p"] - prev
            prev = w["p"].copy()
        assert np.allclose(np.abs(step), lr, rtol=1e-3)
        assert np.all(np.sign(step) == -np.sign(g["p"]))

    def test_moments_decay_without_gradient(self):
        w = {"p": np.ones(2)}
        m = {"p": np.array([1.0, 1.0])}
        v = {"p": np.array([1.0, 1.0])}
        adam_step(w, {"p": np.zeros(2)}, m, v, 10, 1e-3)
        assert np.all(m["p"] == 0.9)
        assert np.all(v["p"] == 0.999)


class TestTrain:
    def test_insufficient_data_raises(self, small_dataset, vparams):
        cfg = TrainingConfig(batch_size=10 ** 6, epochs=1)
        with pytest.raises(DataInsufficient):
            train(small_dataset, cfg, vparams)

    def test_lr_zero_keeps_weights(self, small_dataset, vparams):
        cfg = TrainingConfig(learning_rate=0.0, epochs=1, seed=5)
        weights, _, _ = train(small_dataset, cfg, vparams)
        init = init_weights(5)
        for k in weights:
            assert np.array_equal(weights[k], init[k])

    def test_smoke_loss_decreases_and_beats_baseline(self, small_dataset,
                                                     vparams):
        cfg = TrainingConfig(epochs=5, seed=7)
        _, _, report = train(small_dataset, cfg, vparams)
        first_train = report.epochs[0][1]
        last_train = report.epochs[-1][1]
        assert last_train < first_train
        assert report.best_val_loss < report.baseline_val_loss

    def test_seeded_determinism(self, small_dataset, vparams):
        cfg = TrainingConfig(epochs=1, seed=11)
        w1, _, r1 = train(small_dataset, cfg, vparams)
        w2, _, r2 = train(small_dataset, cfg, vparams)
        for k in w1:
            assert np.array_equal(w1[k], w2[k])
        assert r1.epochs == r2.epochs

    def test_report_csv(self, small_dataset, vparams, tmp_path):
        cfg = TrainingConfig(epochs=2, seed=3)
        _, _, report = train(small_dataset, cfg, vparams)
        f = tmp_path / "report.csv"
        report.save_csv(f)
        lines = f.read_text().strip().splitlines()
        assert lines[0] == "epoch,train_loss,val_loss"
        assert len(lines) == 3


class TestConfigValidation:
    def test_rejects_bad_loss_weights(self):
        with pytest.raises(ValueError):
            TrainingConfig(loss_weights=(0.5, 0.5, 0.5))

    def test_rejects_bad_gamma(self):
        with pytest.raises(ValueError):
            TrainingConfig(gamma=0.0)
