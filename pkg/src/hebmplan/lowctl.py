"""Low-level 100 Hz controllers translating planner commands into simulator
inputs: PID speed control (torques) and open-loop + PID steering."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bicycle import DELTA_MAX
from .datagen import split_torque
from .geometry import nearest_path_point, wrap_to_pi
from .params import VehicleParams
from .refsim import FullControl

# longitudinal (speed -> total torque) and lateral (heading -> steering) gains
LON_GAINS = (500.0, 20.0, 15.0)
LAT_GAINS = (0.2, 0.01, 0.005)

TOTAL_TORQUE_LIMITS = (-1000.0, 800.0)
LOOKAHEAD_STEPS = 5
CTRL_DT = 0.01


@dataclass
class PidState:
    kp: float
    kd: float
    ki: float
    out_limits: tuple
    dt: float = CTRL_DT
    integral: float = 0.0
    prev_error: float = 0.0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")

    def reset(self):
        self.integral = 0.0
        self.prev_error = 0.0

    def step(self, error: float) -> float:
        """Kp*e + Kd*de/dt + Ki*int(e), rectangle-rule integral, clamped
        output with anti-windup integral clamping."""
        d_term = self.kd * (error - self.prev_error) / self.dt
        self.prev_error = error
        self.integral += error * self.dt
        if self.ki > 0:
            bound = max(abs(l) for l in self.out_limits) / self.ki
            self.integral = float(np.clip(self.integral, -bound, bound))
        out = self.kp * error + d_term + self.ki * self.integral
        return float(np.clip(out, *self.out_limits))


def pid_step(pid: PidState, error: float) -> float:
    return pid.step(error)


class LowLevelController:
    """One instance per closed loop; consumes planner commands at 100 Hz."""

    def __init__(self, params: VehicleParams, rollout_model, path):
        self.params = params
        self.model = rollout_model  # same model family as the planner
        self.path = path
        self.speed_pid = PidState(*LON_GAINS, out_limits=TOTAL_TORQUE_LIMITS)
        self.steer_pid = PidState(*LAT_GAINS,
                                  out_limits=(-DELTA_MAX, DELTA_MAX))
        self._hint = 0

    def longitudinal_control(self, v_ref: float, v_vehicle: float) -> tuple:
        """PID on speed error -> total torque demand, split across wheels."""
        total = self.speed_pid.step(v_ref - v_vehicle)
        return split_torque(total, self.params)

    def lateral_control(self, delta_ref: float, v_ref: float, pose,
                        history) -> float:
        """Open-loop reference steering plus a PID correction on the heading
        error projected LOOKAHEAD_STEPS ahead with the rollout model."""
        x, y, psi = pose
        ctx = self.model.make_context(history, 1)
        xa = np.array([x])
        ya = np.array([y])
        pa = np.array([psi])
        v = np.array([max(v_ref, 0.0)])
        d = np.array([np.clip(delta_ref, -DELTA_MAX, DELTA_MAX)])
        for _ in range(LOOKAHEAD_STEPS):
            xd, yd, pd = self.model.step(xa, ya, pa, v, d, ctx)
            xa = xa + xd * CTRL_DT
            ya = ya + yd * CTRL_DT
            pa = pa + pd * CTRL_DT
        idx, _ = nearest_path_point(self.path, float(xa[0]), float(ya[0]),
                                    self._hint)
        self._hint = idx
        err = wrap_to_pi(float(pa[0]) - self.path.psi[idx])
        delta = delta_ref - self.steer_pid.step(err)
        return float(np.clip(delta, -DELTA_MAX, DELTA_MAX))

    def control(self, v_ref: float, delta_ref: float, v_vehicle: float,
                pose, history) -> FullControl:
        torques = self.longitudinal_control(v_ref, v_vehicle)
        delta = self.lateral_control(delta_ref, v_ref, pose, history)
        return FullControl(torques, delta)
