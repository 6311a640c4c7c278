"""Training loss: one-step extended-bicycle prediction vs reference velocities.

Predicted slips are pushed through the slip-extended bicycle derivative and
an Euler step from the previous pose; the resulting inertial velocities are
rotated into the vehicle frame and compared to the reference (Vx, Vy,
psi_dot) with a weighted L1. The comparison is invariant to the previous
pose, so training samples may carry a zero pose.
"""
from __future__ import annotations

import numpy as np

from ..bicycle import (BicycleControl, BicycleState, SlipPair,
                       ebm_derivative, ebm_derivative_arrays, integrate_step)
from ..geometry import world_to_body
from ..params import VehicleParams

LOSS_WEIGHTS = (0.2, 0.4, 0.4)
GAMMA = 0.05
TRAIN_DT = 0.01


def predict_body_velocities(v, delta, alpha_f, alpha_r, params: VehicleParams,
                            psi_prev=0.0):
    """One-step model prediction expressed in the vehicle frame (vectorized)."""
    x_dot, y_dot, psi_dot, beta = ebm_derivative_arrays(
        psi_prev, v, delta, alpha_f, alpha_r, params)
    vx, vy = world_to_body(psi_prev, x_dot, y_dot)
    return vx, vy, psi_dot, beta


def loss_batch(pred_slips, v, delta, target, params: VehicleParams,
               weights=LOSS_WEIGHTS, gamma: float = GAMMA,
               return_grad: bool = False):
    """Mean weighted-L1 loss over a batch.

    pred_slips: (B, 2) predicted (alpha_f, alpha_r); v, delta: (B,) controls
    at the predicted step; target: (B, 3) reference (Vx, Vy, psi_dot).
    With return_grad, also returns d(mean loss)/d(pred_slips), using the
    subgradient 0 at L1 kinks.
    """
    pred_slips = np.asarray(pred_slips, dtype=float)
    af = pred_slips[:, 0]
    ar = pred_slips[:, 1]
    v = np.asarray(v, dtype=float)
    delta = np.asarray(delta, dtype=float)
    target = np.asarray(target, dtype=float)
    w1, w2, w3 = weights
    w3 = w3 / gamma
    wb = params.wheelbase

    tf = np.tan(delta - af)
    tr = np.tan(ar)
    u = (-params.l_f * tr + params.l_r * tf) / wb
    beta = np.arctan(u)
    cb, sb = np.cos(beta), np.sin(beta)
    vx_p = v * cb
    vy_p = v * sb
    pd_p = v * cb * (tf + tr) / wb

    dvx = vx_p - target[:, 0]
    dvy = vy_p - target[:, 1]
    dpd = pd_p - target[:, 2]
    per_sample = w1 * np.abs(dvx) + w2 * np.abs(dvy) + w3 * np.abs(dpd)
    mean_loss = float(per_sample.mean())
    if not return_grad:
        return mean_loss

    n = pred_slips.shape[0]
    dtf_daf = -(1.0 + tf ** 2)
    dtr_dar = 1.0 + tr ** 2
    du_daf = params.l_r * dtf_daf / wb
    du_dar = -params.l_f * dtr_dar / wb
    dbeta = 1.0 / (1.0 + u ** 2)
    dbeta_daf = dbeta * du_daf
    dbeta_dar = dbeta * du_dar

    s1 = w1 * np.sign(dvx)
    s2 = w2 * np.sign(dvy)
    s3 = w3 * np.sign(dpd)

    dvx_db = -v * sb
    dvy_db = v * cb
    dpd_db = -v * sb * (tf + tr) / wb

    g_af = (s1 * dvx_db * dbeta_daf + s2 * dvy_db * dbeta_daf
            + s3 * (dpd_db * dbeta_daf + v * cb * dtf_daf / wb))
    g_ar = (s1 * dvx_db * dbeta_dar + s2 * dvy_db * dbeta_dar
            + s3 * (dpd_db * dbeta_dar + v * cb * dtr_dar / wb))
    grad = np.column_stack([g_af, g_ar]) / n
    return mean_loss, grad


def loss_single(pred: SlipPair, prev_pose: BicycleState,
                control: BicycleControl, target, params: VehicleParams,
                dt: float = TRAIN_DT, weights=LOSS_WEIGHTS,
                gamma: float = GAMMA) -> float:
    """Scalar loss for one sample, computed through the stated model path
    (derivative, Euler step, frame transform)."""
    deriv = ebm_derivative(prev_pose, control, pred, params)
    integrate_step(prev_pose, deriv, dt)  # pose advance; velocities compared below
    vx, vy = world_to_body(prev_pose.psi, deriv.x_dot, deriv.y_dot)
    w1, w2, w3 = weights
    return (w1 * abs(vx - target[0]) + w2 * abs(vy - target[1])
            + (w3 / gamma) * abs(deriv.psi_dot - target[2]))
