"""Pure-python (numpy) 9-DoF simulation kernel.

State layout (14):  [X, Y, psi, Vx, Vy, psi_dot, theta, theta_dot,
                     phi, phi_dot, w_fl, w_fr, w_rl, w_rr]
Control layout (5): [T_fl, T_fr, T_rl, T_rr, delta]
Param layout (27):  see ``pack_params`` in simulator.py.
Diag layout (22):   [alpha*4, kappa*4, fz*4, fxp*4, fyp*4, ax, ay]

The compiled kernel in ``_kernel_cy.pyx`` mirrors these formulas
operation-for-operation; keep the two in sync.
"""
import numpy as np

BACKEND = "python"

# wheel positions in the body frame, order FL, FR, RL, RR
_WHEEL_SIGN_Y = np.array([1.0, -1.0, 1.0, -1.0])


def _magic(slip, b, c, d, e):
    bs = b * slip
    return d * np.sin(c * np.arctan(bs - e * (bs - np.arctan(bs))))


def derivative(state, ctrl, p, dstate, diag):
    (m, l_f, l_r, l_w, h, r_eff, i_x, i_y, i_z, i_w, mu, g,
     cda, rho, v_floor, k_roll, c_roll, k_pitch, c_pitch,
     bx, cx, dx_s, ex, by, cy, dy_s, ey) = p

    psi = state[2]
    vx, vy, psi_dot = state[3], state[4], state[5]
    theta, theta_dot = state[6], state[7]
    phi, phi_dot = state[8], state[9]
    omega = state[10:14]
    delta = ctrl[4]

    wb = l_f + l_r
    wx = np.array([l_f, l_f, -l_r, -l_r])
    wy = l_w * _WHEEL_SIGN_Y
    steer = np.array([delta, delta, 0.0, 0.0])

    # wheel-center velocities, rotated into each wheel's frame
    vwx = vx - psi_dot * wy
    vwy = vy + psi_dot * wx
    cd, sd = np.cos(steer), np.sin(steer)
    vlx = vwx * cd + vwy * sd
    vly = -vwx * sd + vwy * cd

    denom = np.maximum(np.abs(vlx), v_floor)
    kappa = (r_eff * omega - vlx) / denom
    alpha = np.arctan(vly / denom)

    # normal loads: static split + spring-damper roll/pitch transfer
    tau_pitch = k_pitch * phi + c_pitch * phi_dot
    tau_roll = k_roll * theta + c_roll * theta_dot
    fz_front = m * g * l_r / (2.0 * wb) + tau_pitch / (2.0 * wb)
    fz_rear = m * g * l_f / (2.0 * wb) - tau_pitch / (2.0 * wb)
    fz = np.array([fz_front, fz_front, fz_rear, fz_rear])
    fz = fz - _WHEEL_SIGN_Y * tau_roll / (4.0 * l_w)
    fz = np.maximum(fz, 0.0)

    # pure-slip magic formula, then friction-ellipse combined-slip scaling
    fxp = _magic(kappa, bx, cx, dx_s * mu * fz, ex)
    fyp = -_magic(alpha, by, cy, dy_s * mu * fz, ey)
    fnorm = np.sqrt(fxp * fxp + fyp * fyp)
    fmax = mu * fz
    scale = np.where(fnorm > fmax, np.divide(fmax, fnorm,
                     out=np.ones_like(fnorm), where=fnorm > 0.0), 1.0)
    fxp = fxp * scale
    fyp = fyp * scale

    fx = fxp * cd - fyp * sd
    fy = fxp * sd + fyp * cd

    f_aero = -0.5 * rho * cda * vx * abs(vx)
    ax = (fx.sum() + f_aero) / m
    ay = fy.sum() / m
    mz = np.sum(wx * fy - wy * fx)

    cpsi, spsi = np.cos(psi), np.sin(psi)
    dstate[0] = vx * cpsi - vy * spsi
    dstate[1] = vx * spsi + vy * cpsi
    dstate[2] = psi_dot
    dstate[3] = ax + psi_dot * vy
    dstate[4] = ay - psi_dot * vx
    dstate[5] = mz / i_z
    dstate[6] = theta_dot
    dstate[7] = (m * h * ay - tau_roll) / i_x
    dstate[8] = phi_dot
    dstate[9] = (-m * h * ax - tau_pitch) / i_y
    dstate[10:14] = (ctrl[0:4] - r_eff * fxp) / i_w

    if diag is not None:
        diag[0:4] = alpha
        diag[4:8] = kappa
        diag[8:12] = fz
        diag[12:16] = fxp
        diag[16:20] = fyp
        diag[20] = ax
        diag[21] = ay


def rk4_step(state, ctrl, p, dt):
    """One RK4 step; returns (new_state, diag at the step's start)."""
    state = np.asarray(state, dtype=np.float64)
    diag = np.empty(22)
    k1 = np.empty(14)
    k2 = np.empty(14)
    k3 = np.empty(14)
    k4 = np.empty(14)
    derivative(state, ctrl, p, k1, diag)
    derivative(state + 0.5 * dt * k1, ctrl, p, k2, None)
    derivative(state + 0.5 * dt * k2, ctrl, p, k3, None)
    derivative(state + dt * k3, ctrl, p, k4, None)
    new = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    # braking clamp: wheels never spin backwards beyond tolerance
    np.maximum(new[10:14], -1.0, out=new[10:14])
    return new, diag


def advance(state, ctrl, p, dt, n_sub):
    """n_sub RK4 substeps under constant control.

    Returns (new_state, diag of the first substep's start, ok flag);
    ok is False when any state magnitude exceeds 1e6.
    """
    diag0 = None
    for i in range(n_sub):
        state, diag = rk4_step(state, ctrl, p, dt)
        if i == 0:
            diag0 = diag
    ok = bool(np.all(np.abs(state) <= 1e6)) and bool(np.all(np.isfinite(state)))
    return state, diag0, ok
