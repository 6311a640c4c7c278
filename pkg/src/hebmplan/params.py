"""Vehicle and tire parameter sets shared by the simulator and the planners."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict


@dataclass(frozen=True)
class PacejkaCoeffs:
    """Magic-formula coefficients for one force channel (D = d_scale * mu * Fz)."""

    b: float
    c: float
    d_scale: float
    e: float

    def __post_init__(self):
        if self.b <= 0 or self.c <= 0:
            raise ValueError("Pacejka B and C must be positive")
        if not (1.0 < self.c <= 2.5):
            raise ValueError(f"Pacejka C out of range (1, 2.5]: {self.c}")
        if self.e > 1.0:
            raise ValueError(f"Pacejka E must be <= 1: {self.e}")


# Representative passenger-tire channels; overridable through config.
DEFAULT_LON_TIRE = PacejkaCoeffs(b=11.0, c=1.65, d_scale=1.0, e=0.97)
DEFAULT_LAT_TIRE = PacejkaCoeffs(b=9.0, c=1.3, d_scale=1.0, e=0.97)

# Roll/pitch spring-damper target dynamics (natural frequency, damping ratio).
_SUSP_FREQ_HZ = 1.5
_SUSP_ZETA = 0.7


@dataclass(frozen=True)
class VehicleParams:
    """Mid-size sedan defaults; every field can be overridden via config."""

    mass: float = 1878.0          # kg
    l_f: float = 1.384            # m, front axle to cog
    l_r: float = 1.356            # m, rear axle to cog
    l_w: float = 0.781            # m, half track width
    h_cog: float = 0.55           # m, cog height
    r_eff: float = 0.303          # m, effective wheel radius
    i_x: float = 700.0            # kg m^2, roll inertia
    i_y: float = 3500.0           # kg m^2, pitch inertia
    i_z: float = 4045.0           # kg m^2, yaw inertia
    i_w: float = 1.5              # kg m^2, wheel spin inertia
    mu: float = 1.0               # road friction
    g: float = 9.81               # m/s^2
    cda: float = 0.7              # m^2, drag area (0.5*rho*CdA*V^2 at the front)
    rho_air: float = 1.225        # kg/m^3
    tire_lon: PacejkaCoeffs = field(default=DEFAULT_LON_TIRE)
    tire_lat: PacejkaCoeffs = field(default=DEFAULT_LAT_TIRE)
    v_slip_floor: float = 0.5     # m/s, low-speed floor for slip quantities

    def __post_init__(self):
        for name in ("mass", "l_f", "l_r", "l_w", "h_cog", "r_eff",
                     "i_x", "i_y", "i_z", "i_w", "g"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if not (0.0 < self.mu <= 1.5):
            raise ValueError(f"mu out of range (0, 1.5]: {self.mu}")

    @property
    def wheelbase(self) -> float:
        return self.l_f + self.l_r

    @property
    def roll_stiffness(self) -> float:
        wn = 2.0 * math.pi * _SUSP_FREQ_HZ
        return self.i_x * wn * wn

    @property
    def roll_damping(self) -> float:
        return 2.0 * _SUSP_ZETA * math.sqrt(self.roll_stiffness * self.i_x)

    @property
    def pitch_stiffness(self) -> float:
        wn = 2.0 * math.pi * _SUSP_FREQ_HZ
        return self.i_y * wn * wn

    @property
    def pitch_damping(self) -> float:
        return 2.0 * _SUSP_ZETA * math.sqrt(self.pitch_stiffness * self.i_y)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "VehicleParams":
        d = dict(d)
        for key in ("tire_lon", "tire_lat"):
            if key in d and isinstance(d[key], dict):
                d[key] = PacejkaCoeffs(**d[key])
        return cls(**d)
