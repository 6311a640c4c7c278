"""Sampling-based path-integral planner: K perturbed rollouts of a pluggable
bicycle model, exponentially weighted control update, Savitzky-Golay
smoothing."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import savgol_filter
from scipy.stats import truncnorm

from .bicycle import DELTA_MAX, ebm_derivative_arrays, kbm_derivative_arrays
from .geometry import PathRef, nearest_path_point, nearest_path_points_batch, wrap_to_pi
from .params import VehicleParams
from .slipnet.network import Normalizer, forward_batch

V_CMD_MAX = 40.0  # m/s, command clamp matching the data-generation envelope


class InvalidFilterSpec(ValueError):
    pass


class DegeneratePath(RuntimeError):
    """The reference path is exhausted ahead of the vehicle."""


@dataclass(frozen=True)
class MppiParams:
    lam: float = 0.3                      # inverse temperature
    nu: float = 1000.0                    # exploration-noise factor
    k_samples: int = 1024
    horizon: int = 100
    dt: float = 0.01
    r_diag: float = 1e-2                  # control weight R = r_diag * I2
    q_pos: float = 4.0                    # position terms of the state cost
    q_psi: float = 40.0                   # heading term (4 * 10)
    q_v: float = 3.0
    noise_v: tuple = (-0.08, 0.05)        # m/s
    noise_delta: tuple = (-0.02, 0.02)    # rad
    sg_window: int = 11
    sg_order: int = 3
    n_apply: int = 5                      # controls consumed per plan (20 Hz)
    seed: int = 0

    def __post_init__(self):
        if self.k_samples < 1 or self.horizon < 1:
            raise ValueError("K and N must be >= 1")
        if self.lam <= 0 or self.r_diag <= 0:
            raise ValueError("lambda and R must be positive")
        for lo, hi in (self.noise_v, self.noise_delta):
            if not lo < hi:
                raise ValueError("noise ranges must be nonempty")


def savitzky_golay(sequence, window: int, order: int):
    """Least-squares polynomial smoothing per channel, mirror-padded edges."""
    seq = np.asarray(sequence, dtype=float)
    if window % 2 == 0 or order >= window:
        raise InvalidFilterSpec("window must be odd and order < window")
    if seq.shape[0] < window:
        raise InvalidFilterSpec("sequence shorter than filter window")
    return savgol_filter(seq, window, order, axis=0, mode="mirror")


def softmin_weights(costs, lam: float):
    """Exponential weights exp(-(S - S_min)/lam), normalized to sum to 1."""
    costs = np.asarray(costs, dtype=float)
    w = np.exp(-(costs - costs.min()) / lam)
    return w / w.sum()


def mppi_update(costs, noises, controls, lam: float):
    """Softmin-weighted noise average added to the control sequence."""
    w = softmin_weights(costs, lam)
    return controls + np.einsum("k,ktc->tc", w, noises)


def sample_noise(rng, k: int, n: int, params: MppiParams):
    """Truncated-Gaussian perturbations within the configured ranges
    (zero-centered, sigma = range/4).

    Zero centering matters: a midpoint-centered draw over an asymmetric
    range biases every update and makes the commanded speed drift."""
    out = np.empty((k, n, 2))
    for ch, (lo, hi) in enumerate((params.noise_v, params.noise_delta)):
        sigma = (hi - lo) / 4.0
        out[:, :, ch] = truncnorm.rvs(lo / sigma, hi / sigma, loc=0.0,
                                      scale=sigma, size=(k, n),
                                      random_state=rng)
    return out


def state_cost(x, y, psi, v_cmd, path: PathRef, idx, params: MppiParams):
    """q(Z) against the nearest path sample, plus the speed tracking term."""
    ref = path.samples[idx]
    ex = x - ref[..., 1]
    ey = y - ref[..., 2]
    epsi = wrap_to_pi(psi - ref[..., 3])
    return (params.q_pos * (ex * ex + ey * ey) + params.q_psi * epsi * epsi
            + params.q_v * (v_cmd - path.v_desired) ** 2)


def control_cost(u, du, params: MppiParams):
    """Exploration-weighted control terms of the running cost."""
    r = params.r_diag
    quad = lambda a, b: r * np.sum(a * b, axis=-1)  # noqa: E731 (diagonal R)
    return (0.5 * (1.0 - 1.0 / params.nu) * quad(du, du) + quad(u, du)
            + 0.5 * quad(u, u))


def running_cost(x, y, psi, u, du, path: PathRef, idx, params: MppiParams):
    v_cmd = np.asarray(u)[..., 0]
    return (state_cost(x, y, psi, v_cmd, path, idx, params)
            + control_cost(np.asarray(u), np.asarray(du), params))


class KbmModel:
    """Slip-free bicycle rollout model (comparison baseline)."""

    name = "kbm"
    needs_weights = False

    def __init__(self, params: VehicleParams):
        self.params = params

    def make_context(self, history, k: int):
        return None

    def step(self, x, y, psi, v, delta, ctx):
        xd, yd, pd, _ = kbm_derivative_arrays(psi, v, delta, self.params)
        return xd, yd, pd


class HebmModel:
    """Hybrid rollout model: slip-extended bicycle with learned slip angles.

    The rollout context carries a per-sample history window; beyond the
    first step it is bootstrapped with the model's own predicted body
    velocities.
    """

    name = "hebm"
    needs_weights = True
    SLIP_CLIP = 0.45  # rad, keeps tan() well-conditioned

    def __init__(self, params: VehicleParams, weights: dict,
                 normalizer: Normalizer):
        self.params = params
        self.weights = weights
        self.normalizer = normalizer
        # rollouts tolerate single precision; halves the forward-pass cost
        self._w32 = {k: np.asarray(v, dtype=np.float32)
                     for k, v in weights.items()}
        self._norm32 = Normalizer(
            np.asarray(normalizer.mean, dtype=np.float32),
            np.asarray(normalizer.scale, dtype=np.float32))

    def make_context(self, history, k: int):
        """history: (states (10, 3), controls (9, 2)) measured most recent
        last; replicated across the k rollouts."""
        states, controls = history
        return {
            "states": np.repeat(np.asarray(states, float)[None], k, axis=0),
            "controls": np.repeat(np.asarray(controls, float)[None], k, axis=0),
        }

    def predict_slips(self, v, delta, ctx):
        k = ctx["states"].shape[0]
        window = np.empty((k, 10, 5))
        window[:, :, 0:3] = ctx["states"]
        window[:, 0:9, 3:5] = ctx["controls"]
        window[:, 9, 3] = v
        window[:, 9, 4] = delta
        slips = forward_batch(window, self._w32, self._norm32)
        return np.clip(slips.astype(np.float64), -self.SLIP_CLIP,
                       self.SLIP_CLIP)

    def step(self, x, y, psi, v, delta, ctx):
        slips = self.predict_slips(v, delta, ctx)
        xd, yd, pd, beta = ebm_derivative_arrays(
            psi, v, delta, slips[:, 0], slips[:, 1], self.params)
        # bootstrap the history with the model's own body-frame prediction
        ctx["states"] = np.roll(ctx["states"], -1, axis=1)
        ctx["states"][:, -1, 0] = v * np.cos(beta)
        ctx["states"][:, -1, 1] = v * np.sin(beta)
        ctx["states"][:, -1, 2] = pd
        ctx["controls"] = np.roll(ctx["controls"], -1, axis=1)
        ctx["controls"][:, -1, 0] = v
        ctx["controls"][:, -1, 1] = delta
        return xd, yd, pd


def clamp_controls(seq):
    out = np.array(seq, dtype=float)
    out[..., 0] = np.clip(out[..., 0], 0.0, V_CMD_MAX)
    out[..., 1] = np.clip(out[..., 1], -DELTA_MAX, DELTA_MAX)
    return out


@dataclass
class PlanDiagnostics:
    cost_min: float
    cost_mean: float
    planned_xy: np.ndarray  # (N, 3) noiseless rollout of the updated sequence


class MppiPlanner:
    """Owns the control sequence and the planning loop for one vehicle."""

    def __init__(self, model, path: PathRef, params: MppiParams):
        self.model = model
        self.path = path
        self.params = params
        self.rng = np.random.default_rng(
            np.random.SeedSequence(entropy=params.seed, spawn_key=(2,)))
        self.controls = np.empty((params.horizon, 2))
        for t in range(params.horizon):
            self.controls[t] = self._feedforward(0, t)
        self._hint = 0

    def _feedforward(self, idx0: int, t: int):
        """Warm-start control for horizon step t from path sample idx0:
        desired speed plus the steering that holds the path curvature at the
        arclength the vehicle is expected to reach. The sampled update only
        has to learn residuals, which keeps curve entry within the
        exploration noise's authority."""
        p = self.params
        ds = self.path.s[1] - self.path.s[0] if len(self.path) > 1 else 1.0
        idx = min(idx0 + int(round(self.path.v_desired * (t + 1) * p.dt / ds)),
                  len(self.path) - 1)
        return (self.path.v_desired,
                np.arctan(self.model.params.wheelbase * self.path.kappa[idx]))

    def plan(self, pose, history):
        """One planner iteration from pose (x, y, psi).

        Returns (first n_apply controls, PlanDiagnostics). Deterministic
        given the seed and inputs.
        """
        p = self.params
        x0, y0, psi0 = pose
        idx0, _ = nearest_path_point(self.path, x0, y0, self._hint)
        self._hint = idx0
        if idx0 >= len(self.path) - 2 and not np.allclose(
                self.path.samples[0, 1:3], self.path.samples[-1, 1:3], atol=0.02):
            raise DegeneratePath("vehicle reached the end of the reference path")

        k, n = p.k_samples, p.horizon
        noise = sample_noise(self.rng, k, n, p)
        costs = self._rollout_costs(self.controls[None] + noise,
                                    (x0, y0, psi0), idx0, history,
                                    controls_base=self.controls)
        updated = mppi_update(costs, noise, self.controls, p.lam)
        smoothed = clamp_controls(savitzky_golay(updated, p.sg_window,
                                                 p.sg_order))

        planned = self._noiseless_rollout(smoothed, (x0, y0, psi0), history)
        first = smoothed[:p.n_apply].copy()
        # receding horizon: consume n_apply steps; initialize the freed tail
        # slots with the curvature feedforward at their expected arclength
        self.controls[:-p.n_apply] = smoothed[p.n_apply:]
        for j in range(p.n_apply):
            t = p.horizon - p.n_apply + j
            self.controls[t] = self._feedforward(idx0, t + p.n_apply)
        diag = PlanDiagnostics(float(costs.min()), float(costs.mean()),
                               planned)
        return first, diag

    def _rollout_costs(self, perturbed, pose, idx0, history,
                       controls_base=None):
        """Euler-roll K control sequences, accumulating the running cost and
        the terminal state cost."""
        p = self.params
        k, n = perturbed.shape[0], perturbed.shape[1]
        x = np.full(k, pose[0])
        y = np.full(k, pose[1])
        psi = np.full(k, pose[2])
        hints = np.full(k, idx0, dtype=np.intp)
        ctx = self.model.make_context(history, k)
        costs = np.zeros(k)
        for t in range(n):
            u_applied = clamp_controls(perturbed[:, t])
            v, delta = u_applied[:, 0], u_applied[:, 1]
            xd, yd, pd = self.model.step(x, y, psi, v, delta, ctx)
            x = x + xd * p.dt
            y = y + yd * p.dt
            psi = psi + pd * p.dt
            hints = nearest_path_points_batch(self.path, x, y, hints)
            du = (perturbed[:, t] - controls_base[t]
                  if controls_base is not None else np.zeros_like(u_applied))
            costs += state_cost(x, y, psi, v, self.path, hints, p)
            costs += control_cost(
                controls_base[t][None] if controls_base is not None
                else u_applied, du, p)
        costs += state_cost(x, y, psi, u_applied[:, 0], self.path, hints, p)
        return costs

    def _noiseless_rollout(self, controls, pose, history):
        p = self.params
        x = np.full(1, pose[0])
        y = np.full(1, pose[1])
        psi = np.full(1, pose[2])
        ctx = self.model.make_context(history, 1)
        out = np.empty((p.horizon, 3))
        for t in range(p.horizon):
            u = clamp_controls(controls[t][None])
            xd, yd, pd = self.model.step(x, y, psi, u[:, 0], u[:, 1], ctx)
            x = x + xd * p.dt
            y = y + yd * p.dt
            psi = psi + pd * p.dt
            out[t] = (x[0], y[0], psi[0])
        return out
