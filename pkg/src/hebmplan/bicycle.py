"""Planar bicycle models: kinematic (no slip) and slip-extended variants.

Both are pure functions usable concurrently across planner rollouts. The
``*_arrays`` forms are vectorized over leading batch dimensions; the
dataclass forms wrap them for scalar use.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import VehicleParams

DELTA_MAX = 0.5  # rad, actuator limit matching the data-generation range


@dataclass(frozen=True)
class BicycleState:
    x: float
    y: float
    psi: float  # unwrapped

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.psi)):
            raise ValueError("BicycleState fields must be finite")


@dataclass(frozen=True)
class BicycleControl:
    v: float      # m/s, speed command at the cog
    delta: float  # rad, front steering

    def __post_init__(self):
        if self.v < 0:
            raise ValueError("speed command must be >= 0")
        if abs(self.delta) > DELTA_MAX + 1e-12:
            raise ValueError(f"|delta| exceeds actuator limit {DELTA_MAX}")


@dataclass(frozen=True)
class SlipPair:
    alpha_f: float
    alpha_r: float

    def __post_init__(self):
        if not (abs(self.alpha_f) < np.pi / 2 and abs(self.alpha_r) < np.pi / 2):
            raise ValueError("slip angles must lie in (-pi/2, pi/2)")


@dataclass(frozen=True)
class BicycleDerivative:
    x_dot: float
    y_dot: float
    psi_dot: float
    beta: float  # side-slip, reported for reuse by the training frame transform


def kbm_derivative_arrays(psi, v, delta, params: VehicleParams):
    """Kinematic bicycle state evolution (slip-free)."""
    wb = params.wheelbase
    beta = np.arctan(params.l_r * np.tan(delta) / wb)
    heading = psi + beta
    x_dot = v * np.cos(heading)
    y_dot = v * np.sin(heading)
    psi_dot = v * np.tan(delta) * np.cos(beta) / wb
    return x_dot, y_dot, psi_dot, beta


def ebm_derivative_arrays(psi, v, delta, alpha_f, alpha_r, params: VehicleParams):
    """Extended bicycle state evolution with front/rear wheel slip angles."""
    wb = params.wheelbase
    tf = np.tan(delta - alpha_f)
    tr = np.tan(alpha_r)
    beta = np.arctan((-params.l_f * tr + params.l_r * tf) / wb)
    heading = psi + beta
    x_dot = v * np.cos(heading)
    y_dot = v * np.sin(heading)
    psi_dot = v * np.cos(beta) * (tf + tr) / wb
    return x_dot, y_dot, psi_dot, beta


def kbm_derivative(state: BicycleState, control: BicycleControl,
                   params: VehicleParams) -> BicycleDerivative:
    if abs(control.delta) >= np.pi / 2:
        raise ValueError("|delta| must be < pi/2")
    xd, yd, pd, beta = kbm_derivative_arrays(state.psi, control.v,
                                             control.delta, params)
    return BicycleDerivative(float(xd), float(yd), float(pd), float(beta))


def ebm_derivative(state: BicycleState, control: BicycleControl,
                   slips: SlipPair, params: VehicleParams) -> BicycleDerivative:
    if abs(control.delta - slips.alpha_f) >= np.pi / 2:
        raise ValueError("|delta - alpha_f| must be < pi/2")
    xd, yd, pd, beta = ebm_derivative_arrays(state.psi, control.v, control.delta,
                                             slips.alpha_f, slips.alpha_r, params)
    return BicycleDerivative(float(xd), float(yd), float(pd), float(beta))


def integrate_step(state: BicycleState, deriv: BicycleDerivative,
                   dt: float) -> BicycleState:
    """Explicit Euler step, matching the planner's rollout update exactly."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    return BicycleState(state.x + deriv.x_dot * dt,
                        state.y + deriv.y_dot * dt,
                        state.psi + deriv.psi_dot * dt)
