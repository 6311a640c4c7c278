"""Standalone tire-force primitives (the kernels inline the same math)."""
from __future__ import annotations

import numpy as np

from ..params import PacejkaCoeffs


def pacejka_force(slip, fz, coeffs: PacejkaCoeffs, mu: float):
    """Magic formula D*sin(C*atan(B*s - E*(B*s - atan(B*s)))), D = d_scale*mu*Fz.

    Odd in ``slip``; |force| <= D.
    """
    fz = np.maximum(np.asarray(fz, dtype=float), 0.0)
    d = coeffs.d_scale * mu * fz
    bs = coeffs.b * np.asarray(slip, dtype=float)
    return d * np.sin(coeffs.c * np.arctan(bs - coeffs.e * (bs - np.arctan(bs))))


def combined_slip_scale(fx_pure, fy_pure, fz, mu: float):
    """Friction-ellipse coupling: scale (Fx, Fy) onto the circle of radius
    mu*Fz when outside it, preserving direction."""
    fx = np.asarray(fx_pure, dtype=float)
    fy = np.asarray(fy_pure, dtype=float)
    fmax = mu * np.maximum(np.asarray(fz, dtype=float), 0.0)
    fnorm = np.hypot(fx, fy)
    scale = np.where(fnorm > fmax,
                     np.divide(fmax, fnorm, out=np.ones_like(fnorm + fx),
                               where=fnorm > 0.0),
                     1.0)
    return fx * scale, fy * scale
