"""9-DoF four-wheel ground-truth simulator: the plant being controlled and
the source of training data."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..params import VehicleParams
from .core import kernel

TORQUE_MIN = -1000.0  # N*m, data-generation envelope
TORQUE_MAX = 800.0
DELTA_MAX = 0.5       # rad

LOG_COLUMNS = ["t", "x", "y", "psi", "vx", "vy", "yaw_rate", "v", "delta_cmd",
               "torque_fl", "torque_fr", "torque_rl", "torque_rr",
               "alpha_f", "alpha_r", "ay"]


class NumericalDivergence(RuntimeError):
    """Raised when a state magnitude exceeds 1e6 (unstable inputs/dt)."""


@dataclass(frozen=True)
class FullState:
    """14-component 9-DoF state. Body-frame velocities; wheel order FL, FR, RL, RR."""

    x: float = 0.0
    y: float = 0.0
    psi: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    psi_dot: float = 0.0
    theta: float = 0.0       # roll
    theta_dot: float = 0.0
    phi: float = 0.0         # pitch
    phi_dot: float = 0.0
    omega: tuple = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        vals = self.as_array()
        if not np.all(np.isfinite(vals)):
            raise ValueError("FullState must be finite")
        if min(self.omega) < -1.0 - 1e-9:
            raise ValueError("wheel speeds below braking-clamp tolerance")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.psi, self.vx, self.vy,
                         self.psi_dot, self.theta, self.theta_dot,
                         self.phi, self.phi_dot, *self.omega])

    @classmethod
    def from_array(cls, a) -> "FullState":
        a = np.asarray(a, dtype=float)
        return cls(*a[:10], tuple(a[10:14]))

    @classmethod
    def straight_running(cls, v: float, params: VehicleParams,
                         x=0.0, y=0.0, psi=0.0) -> "FullState":
        """Straight driving at speed v with matched wheel spin."""
        w = v / params.r_eff
        return cls(x=x, y=y, psi=psi,
                   vx=v * 1.0, vy=0.0, omega=(w, w, w, w))


@dataclass(frozen=True)
class FullControl:
    torque: tuple  # 4 wheel torques, N*m
    delta: float   # rad

    def __post_init__(self):
        if abs(self.delta) > DELTA_MAX + 1e-12:
            raise ValueError(f"|delta| exceeds {DELTA_MAX} rad")
        for t in self.torque:
            if not (TORQUE_MIN - 1e-9 <= t <= TORQUE_MAX + 1e-9):
                raise ValueError("wheel torque outside data-generation envelope")

    def as_array(self) -> np.ndarray:
        return np.array([*self.torque, self.delta])


@dataclass(frozen=True)
class TireDiagnostics:
    """Per-wheel quantities at the step's start (order FL, FR, RL, RR)."""

    alpha: np.ndarray       # slip angles, rad
    slip_ratio: np.ndarray
    fz: np.ndarray          # normal loads, N
    fx: np.ndarray          # tire-frame longitudinal forces, N
    fy: np.ndarray          # tire-frame lateral forces, N
    ax: float               # body-frame specific accelerations
    ay: float

    @classmethod
    def from_array(cls, d) -> "TireDiagnostics":
        return cls(alpha=d[0:4].copy(), slip_ratio=d[4:8].copy(),
                   fz=d[8:12].copy(), fx=d[12:16].copy(), fy=d[16:20].copy(),
                   ax=float(d[20]), ay=float(d[21]))


def pack_params(params: VehicleParams) -> np.ndarray:
    """Flatten a VehicleParams into the kernel's parameter vector."""
    tl, tt = params.tire_lon, params.tire_lat
    return np.array([
        params.mass, params.l_f, params.l_r, params.l_w, params.h_cog,
        params.r_eff, params.i_x, params.i_y, params.i_z, params.i_w,
        params.mu, params.g, params.cda, params.rho_air, params.v_slip_floor,
        params.roll_stiffness, params.roll_damping,
        params.pitch_stiffness, params.pitch_damping,
        tl.b, tl.c, tl.d_scale, tl.e,
        tt.b, tt.c, tt.d_scale, tt.e,
    ])


def step9dof(state: FullState, control: FullControl, params: VehicleParams,
             dt: float) -> tuple[FullState, TireDiagnostics]:
    """Advance one RK4 integration step (dt <= 0.002 s). Deterministic."""
    if not (0.0 < dt <= 0.002):
        raise ValueError("dt must lie in (0, 0.002]")
    new, diag = kernel.rk4_step(state.as_array(), control.as_array(),
                                pack_params(params), dt)
    if not (np.all(np.isfinite(new)) and np.all(np.abs(new) <= 1e6)):
        raise NumericalDivergence("state magnitude exceeded 1e6")
    return FullState.from_array(new), TireDiagnostics.from_array(diag)


def measure(state: FullState) -> tuple[float, float, float, float]:
    """Body velocities, yaw rate and scalar speed V = sqrt(Vx^2 + Vy^2)."""
    return (state.vx, state.vy, state.psi_dot,
            math.hypot(state.vx, state.vy))


def axle_slip_angles(state: FullState, delta: float,
                     params: VehicleParams) -> tuple[float, float]:
    """Axle-averaged diagnostic slip angles in the extended-bicycle convention:
    alpha_f = delta - angle(front-axle velocity), alpha_r = -angle(rear-axle
    velocity)."""
    floor = params.v_slip_floor
    denom = max(abs(state.vx), floor)
    vy_f = state.vy + state.psi_dot * params.l_f
    vy_r = state.vy - state.psi_dot * params.l_r
    alpha_f = delta - math.atan(vy_f / denom)
    alpha_r = -math.atan(vy_r / denom)
    return alpha_f, alpha_r


class NineDofSimulator:
    """Stateful closed-loop wrapper over the integration kernel.

    Exposes a 100 Hz interface; integrates internally at ``dt_inner``
    (default 1e-4 s, small enough to keep RK4 stable against the stiff
    wheel-spin mode at the low-speed slip floor).
    """

    def __init__(self, params: VehicleParams | None = None,
                 state: FullState | None = None, dt_inner: float = 1e-4):
        self.params = params or VehicleParams()
        self._p = pack_params(self.params)
        self.state = state or FullState()
        self.dt_inner = dt_inner
        self.t = 0.0

    def reset(self, state: FullState, t: float = 0.0):
        self.state = state
        self.t = t

    def advance(self, control: FullControl, dt: float = 0.01) -> TireDiagnostics:
        """Advance by dt (a multiple of dt_inner) under constant control."""
        n_sub = max(1, round(dt / self.dt_inner))
        new, diag, ok = kernel.advance(self.state.as_array(),
                                       control.as_array(), self._p,
                                       dt / n_sub, n_sub)
        if not ok:
            raise NumericalDivergence(
                f"simulation diverged at t={self.t:.3f}s")
        self.state = FullState.from_array(new)
        self.t += dt
        return TireDiagnostics.from_array(diag)

    def log_row(self, control: FullControl, delta_cmd: float,
                diag: TireDiagnostics) -> list[float]:
        """One 100 Hz trajectory-log row (see LOG_COLUMNS)."""
        st = self.state
        vx, vy, yaw_rate, v = measure(st)
        a_f, a_r = axle_slip_angles(st, control.delta, self.params)
        return [self.t, st.x, st.y, st.psi, vx, vy, yaw_rate, v,
                delta_cmd, *control.torque, a_f, a_r, diag.ay]
