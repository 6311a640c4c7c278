# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled 9-DoF simulation kernel.

Mirrors ``_kernel_py.py`` operation-for-operation; keep the two in sync.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, atan, atan2, sqrt, fabs, fmax

BACKEND = "cython"

cdef double _magic(double slip, double b, double c, double d, double e) nogil:
    cdef double bs = b * slip
    return d * sin(c * atan(bs - e * (bs - atan(bs))))


cdef void _derivative(double* s, double* u, double* p,
                      double* ds, double* diag) nogil:
    cdef double m = p[0], l_f = p[1], l_r = p[2], l_w = p[3], h = p[4]
    cdef double r_eff = p[5], i_x = p[6], i_y = p[7], i_z = p[8], i_w = p[9]
    cdef double mu = p[10], g = p[11], cda = p[12], rho = p[13], v_floor = p[14]
    cdef double k_roll = p[15], c_roll = p[16], k_pitch = p[17], c_pitch = p[18]
    cdef double bx = p[19], cx = p[20], dx_s = p[21], ex = p[22]
    cdef double by = p[23], cy = p[24], dy_s = p[25], ey = p[26]

    cdef double psi = s[2], vx = s[3], vy = s[4], psi_dot = s[5]
    cdef double theta = s[6], theta_dot = s[7], phi = s[8], phi_dot = s[9]
    cdef double delta = u[4]
    cdef double wb = l_f + l_r

    cdef double tau_pitch = k_pitch * phi + c_pitch * phi_dot
    cdef double tau_roll = k_roll * theta + c_roll * theta_dot
    cdef double fz_front = m * g * l_r / (2.0 * wb) + tau_pitch / (2.0 * wb)
    cdef double fz_rear = m * g * l_f / (2.0 * wb) - tau_pitch / (2.0 * wb)

    cdef double fx_sum = 0.0, fy_sum = 0.0, mz = 0.0
    cdef double wx, wy, steer, sgn_y, vwx, vwy, cd, sd, vlx, vly
    cdef double denom, kappa, alpha, fz, fxp, fyp, fnorm, fmax_, scale
    cdef double fx, fy
    cdef int i

    for i in range(4):
        if i < 2:
            wx = l_f
            steer = delta
            fz = fz_front
        else:
            wx = -l_r
            steer = 0.0
            fz = fz_rear
        sgn_y = 1.0 if (i == 0 or i == 2) else -1.0
        wy = l_w * sgn_y

        vwx = vx - psi_dot * wy
        vwy = vy + psi_dot * wx
        cd = cos(steer)
        sd = sin(steer)
        vlx = vwx * cd + vwy * sd
        vly = -vwx * sd + vwy * cd

        denom = fmax(fabs(vlx), v_floor)
        kappa = (r_eff * s[10 + i] - vlx) / denom
        alpha = atan(vly / denom)

        fz = fz - sgn_y * tau_roll / (4.0 * l_w)
        if fz < 0.0:
            fz = 0.0

        fxp = _magic(kappa, bx, cx, dx_s * mu * fz, ex)
        fyp = -_magic(alpha, by, cy, dy_s * mu * fz, ey)
        fnorm = sqrt(fxp * fxp + fyp * fyp)
        fmax_ = mu * fz
        if fnorm > fmax_ and fnorm > 0.0:
            scale = fmax_ / fnorm
            fxp = fxp * scale
            fyp = fyp * scale

        fx = fxp * cd - fyp * sd
        fy = fxp * sd + fyp * cd
        fx_sum += fx
        fy_sum += fy
        mz += wx * fy - wy * fx
        ds[10 + i] = (u[i] - r_eff * fxp) / i_w

        if diag != NULL:
            diag[i] = alpha
            diag[4 + i] = kappa
            diag[8 + i] = fz
            diag[12 + i] = fxp
            diag[16 + i] = fyp

    cdef double f_aero = -0.5 * rho * cda * vx * fabs(vx)
    cdef double ax = (fx_sum + f_aero) / m
    cdef double ay = fy_sum / m
    cdef double cpsi = cos(psi), spsi = sin(psi)

    ds[0] = vx * cpsi - vy * spsi
    ds[1] = vx * spsi + vy * cpsi
    ds[2] = psi_dot
    ds[3] = ax + psi_dot * vy
    ds[4] = ay - psi_dot * vx
    ds[5] = mz / i_z
    ds[6] = theta_dot
    ds[7] = (m * h * ay - tau_roll) / i_x
    ds[8] = phi_dot
    ds[9] = (-m * h * ax - tau_pitch) / i_y

    if diag != NULL:
        diag[20] = ax
        diag[21] = ay


cdef bint _rk4(double* state, double* ctrl, double* p, double dt,
               double* diag) nogil:
    cdef double k1[14]
    cdef double k2[14]
    cdef double k3[14]
    cdef double k4[14]
    cdef double tmp[14]
    cdef int j
    _derivative(state, ctrl, p, k1, diag)
    for j in range(14):
        tmp[j] = state[j] + 0.5 * dt * k1[j]
    _derivative(tmp, ctrl, p, k2, NULL)
    for j in range(14):
        tmp[j] = state[j] + 0.5 * dt * k2[j]
    _derivative(tmp, ctrl, p, k3, NULL)
    for j in range(14):
        tmp[j] = state[j] + dt * k3[j]
    _derivative(tmp, ctrl, p, k4, NULL)
    for j in range(14):
        state[j] = state[j] + (dt / 6.0) * (k1[j] + 2.0 * k2[j]
                                            + 2.0 * k3[j] + k4[j])
    for j in range(10, 14):
        if state[j] < -1.0:
            state[j] = -1.0
    for j in range(14):
        if not (fabs(state[j]) <= 1e6):
            return False
    return True


def rk4_step(state, ctrl, p, double dt):
    """One RK4 step; returns (new_state, diag at the step's start)."""
    cdef cnp.ndarray[double, ndim=1] st = np.array(state, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] ct = np.ascontiguousarray(ctrl, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] pp = np.ascontiguousarray(p, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] diag = np.empty(22, dtype=np.float64)
    _rk4(&st[0], &ct[0], &pp[0], dt, &diag[0])
    return st, diag


def advance(state, ctrl, p, double dt, int n_sub):
    """n_sub RK4 substeps under constant control.

    Returns (new_state, diag of the first substep's start, ok flag).
    """
    cdef cnp.ndarray[double, ndim=1] st = np.array(state, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] ct = np.ascontiguousarray(ctrl, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] pp = np.ascontiguousarray(p, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] diag = np.empty(22, dtype=np.float64)
    cdef bint ok = True
    cdef int i
    with nogil:
        for i in range(n_sub):
            if i == 0:
                ok = _rk4(&st[0], &ct[0], &pp[0], dt, &diag[0])
            else:
                ok = _rk4(&st[0], &ct[0], &pp[0], dt, NULL)
            if not ok:
                break
    return st, diag, bool(ok)
