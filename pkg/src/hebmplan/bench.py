"""Scenario construction (oval, double lane change), closed-loop runs at
20/100 Hz, lateral-error metrics, and HEBM-vs-KBM comparison reports."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .bicycle import DELTA_MAX
from .geometry import PathRef, nearest_path_point, wrap_to_pi
from .lowctl import LowLevelController
from .mppi import HebmModel, KbmModel, MppiParams, MppiPlanner
from .params import VehicleParams
from .refsim import (FullState, NineDofSimulator, LOG_COLUMNS, measure)

OVAL_STRAIGHT = 60.0   # m
OVAL_RADIUS = 35.0     # m
LANE_OFFSET = 3.5      # m, standard lane width
LC_SECTIONS = (15.0, 30.0, 25.0, 30.0, 15.0)  # entry/transition/offset/return/exit
WARMUP_S = 2.0
DIVERGE_LIMIT = 10.0   # m
PLAN_PERIOD = 5        # low-level steps per plan (20 Hz vs 100 Hz)
CTRL_DT = 0.01

REPORT_COLUMNS = ["v_desired", "method", "direction", "mae", "max_err",
                  "mean_v", "max_ay_g"]


class Diverged(RuntimeError):
    """Closed-loop lateral error exceeded the abort threshold."""


@dataclass(frozen=True, eq=False)  # identity hash: used as report dict key
class Scenario:
    name: str                 # "oval" or "lane_change"
    path: PathRef             # one lap (oval, closed) or the maneuver (open)
    v_desired: float
    direction: str = ""       # "cw" | "ccw" for the oval
    laps: float = 1.0
    start_speed: float | None = None  # default: flying start at v_desired
    run_up: float = 0.0       # m of straight prepended before an open maneuver
    seed: int = 0


@dataclass
class RunMetrics:
    mae: float
    max_abs_error: float
    mean_v: float
    max_ay: float             # in units of g
    errors: np.ndarray = field(repr=False, default=None)
    diverged: bool = False

    def __post_init__(self):
        if self.errors is not None and len(self.errors):
            assert self.max_abs_error >= self.mae >= 0.0


def lateral_error(x_v, y_v, x_ref, y_ref, psi_ref):
    """Signed cross-track error: positive when the vehicle sits to the
    path's left."""
    return ((y_v - y_ref) * np.cos(psi_ref) - (x_v - x_ref) * np.sin(psi_ref))


def _segments_to_path(segments, v_desired, spacing=0.1) -> PathRef:
    """Walk (kind, length, curvature) segments, sampling exact analytic pose
    and curvature at fixed arclength spacing."""
    total = sum(seg[0] for seg in segments)
    s_vals = np.arange(0.0, total, spacing)
    if total - s_vals[-1] > 1e-9:
        s_vals = np.append(s_vals, total)
    rows = np.empty((len(s_vals), 5))
    # precompute segment start poses
    starts = [(0.0, 0.0, 0.0, 0.0)]  # (s, x, y, psi)
    for length, kappa in segments:
        s0, x0, y0, p0 = starts[-1]
        if kappa == 0.0:
            x1 = x0 + length * math.cos(p0)
            y1 = y0 + length * math.sin(p0)
            p1 = p0
        else:
            dpsi = kappa * length
            r = 1.0 / kappa
            x1 = x0 + r * (math.sin(p0 + dpsi) - math.sin(p0))
            y1 = y0 - r * (math.cos(p0 + dpsi) - math.cos(p0))
            p1 = p0 + dpsi
        starts.append((s0 + length, x1, y1, p1))
    seg_s0 = [st[0] for st in starts[:-1]]
    for i, s in enumerate(s_vals):
        j = max(0, np.searchsorted(seg_s0, s + 1e-12) - 1)
        length, kappa = segments[j]
        s0, x0, y0, p0 = starts[j]
        ds = s - s0
        if kappa == 0.0:
            x = x0 + ds * math.cos(p0)
            y = y0 + ds * math.sin(p0)
            psi = p0
        else:
            r = 1.0 / kappa
            psi = p0 + kappa * ds
            x = x0 + r * (math.sin(psi) - math.sin(p0))
            y = y0 - r * (math.cos(psi) - math.cos(p0))
        rows[i] = (s, x, y, psi, kappa)
    return PathRef(rows, v_desired)


def make_oval(straight_len: float = OVAL_STRAIGHT, radius: float = OVAL_RADIUS,
              v_desired: float = 10.0, direction: str = "ccw") -> PathRef:
    """Stadium path: two straights joined by semicircles, curvature exactly
    {0, +-1/radius}."""
    if radius <= 0:
        raise ValueError("radius must be > 0")
    kappa = (1.0 if direction == "ccw" else -1.0) / radius
    segs = [(straight_len, 0.0), (math.pi * radius, kappa),
            (straight_len, 0.0), (math.pi * radius, kappa)]
    return _segments_to_path(segs, v_desired)


def make_lane_change(v_desired: float = 10.0, run_up: float = 0.0,
                     exit_extension: float = 0.0) -> PathRef:
    """Double-lane-change centerline: straight entry, cosine blend to a
    +3.5 m offset lane, offset straight, cosine blend back, straight exit.
    C1-smooth; transition curvature signs (+,-) then (-,+)."""
    entry, trans, offset_len, back, exit_ = LC_SECTIONS
    step = 0.05
    x_end = run_up + sum(LC_SECTIONS) + exit_extension
    xs = np.arange(0.0, x_end + step, step)
    x0 = run_up + entry
    x1 = x0 + trans
    x2 = x1 + offset_len
    x3 = x2 + back
    ys = np.zeros_like(xs)
    in_t1 = (xs >= x0) & (xs < x1)
    ys[in_t1] = LANE_OFFSET * 0.5 * (1 - np.cos(np.pi * (xs[in_t1] - x0) / trans))
    ys[(xs >= x1) & (xs < x2)] = LANE_OFFSET
    in_t2 = (xs >= x2) & (xs < x3)
    ys[in_t2] = LANE_OFFSET * 0.5 * (1 + np.cos(np.pi * (xs[in_t2] - x2) / back))
    from .geometry import path_from_xy
    return path_from_xy(xs, ys, v_desired)


def tile_closed_path(path: PathRef, n_laps: int) -> PathRef:
    """Concatenate laps of a closed path into one open path with continuous
    arclength and unwrapped heading (the planner never needs wrap logic)."""
    base = path.samples
    lap_len = base[-1, 0]
    dpsi = base[-1, 3] - base[0, 3]
    rows = [base[:-1]]
    for i in range(1, n_laps):
        lap = base[:-1].copy()
        lap[:, 0] += i * lap_len
        lap[:, 3] += i * dpsi
        rows.append(lap)
    return PathRef(np.concatenate(rows, axis=0), path.v_desired)


def extend_open_path(path: PathRef, extra: float) -> PathRef:
    """Straight continuation past the final sample (planning headroom)."""
    base = path.samples
    psi = base[-1, 3]
    n = int(np.ceil(extra / 0.1))
    ds = (np.arange(1, n + 1)) * 0.1
    ext = np.column_stack([
        base[-1, 0] + ds,
        base[-1, 1] + ds * np.cos(psi),
        base[-1, 2] + ds * np.sin(psi),
        np.full(n, psi),
        np.zeros(n),
    ])
    return PathRef(np.concatenate([base, ext], axis=0), path.v_desired)


def build_model(name: str, vparams: VehicleParams, weights=None,
                normalizer=None):
    if name == "kbm":
        return KbmModel(vparams)
    if name == "hebm":
        if weights is None or normalizer is None:
            raise ValueError("hebm model requires trained weights")
        return HebmModel(vparams, weights, normalizer)
    raise ValueError(f"unknown model {name!r}")


class _History:
    """Rolling measured state/control history feeding the hybrid model."""

    def __init__(self, v0: float):
        self.states = [(v0, 0.0, 0.0)] * 10
        self.controls = [(v0, 0.0)] * 9

    def push(self, vx, vy, psi_dot, v_meas, delta_applied):
        self.states = self.states[1:] + [(vx, vy, psi_dot)]
        self.controls = self.controls[1:] + [(v_meas, delta_applied)]

    def window(self):
        return (np.array(self.states), np.array(self.controls))


def run_closed_loop(scenario: Scenario, model_name: str,
                    mppi_params: MppiParams,
                    vparams: VehicleParams | None = None,
                    weights=None, normalizer=None, log_path=None,
                    plan_log_path=None, timeout_s: float = 120.0):
    """Full 20 Hz plan / 100 Hz control loop against the 9-DoF simulator.

    Returns (RunMetrics, trajectory log array). Metrics exclude the first
    2 s warm-up and, for open maneuvers, the run-up straight. Raises nothing
    on divergence; the metrics carry the flag.
    """
    vparams = vparams or VehicleParams()
    v_des = scenario.v_desired
    horizon_m = mppi_params.horizon * mppi_params.dt * max(v_des, 5.0)

    if scenario.path.is_closed():
        lap_len = scenario.path.length
        duration = scenario.laps * lap_len / max(v_des, 1.0)
        n_laps = int(np.ceil((1.5 * duration * v_des + 2 * horizon_m)
                             / lap_len)) + 1
        plan_path = tile_closed_path(scenario.path, n_laps)
        metric_end_s = None
        metric_start_s = 0.0
    else:
        plan_path = extend_open_path(scenario.path, 2 * horizon_m + 20.0)
        duration = timeout_s
        metric_end_s = scenario.path.length - 1.0
        # the run-up straight is acceleration scaffolding, not part of the
        # maneuver under evaluation
        metric_start_s = scenario.run_up
    plan_path = PathRef(plan_path.samples, v_des)

    model = build_model(model_name, vparams, weights, normalizer)
    planner = MppiPlanner(model, plan_path, mppi_params)
    controller = LowLevelController(vparams, model, plan_path)

    v0 = scenario.start_speed if scenario.start_speed is not None else v_des
    x0, y0, psi0 = plan_path.samples[0, 1:4]
    sim = NineDofSimulator(vparams, FullState.straight_running(
        v0, vparams, x=x0, y=y0, psi=psi0))
    history = _History(v0)

    n_steps = int(round(duration / CTRL_DT))
    rows = []
    plan_rows = []
    errors = []
    speeds = []
    ay_abs = []
    cmds = np.array([[v0, 0.0]] * PLAN_PERIOD)
    hint = 0
    diverged = False
    n_plans = 0
    for k in range(n_steps):
        st = sim.state
        if k % PLAN_PERIOD == 0:
            cmds, pdiag = planner.plan((st.x, st.y, st.psi), history.window())
            n_plans += 1
            plan_rows.append([n_plans, sim.t, pdiag.cost_min, pdiag.cost_mean,
                              cmds[0, 0], cmds[0, 1]])
        v_ref, d_ref = cmds[k % PLAN_PERIOD]
        vx, vy, psi_dot, v_meas = measure(st)
        control = controller.control(v_ref, d_ref, v_meas,
                                     (st.x, st.y, st.psi), history.window())
        diag = sim.advance(control, CTRL_DT)
        st = sim.state
        vx, vy, psi_dot, v_meas = measure(st)
        history.push(vx, vy, psi_dot, v_meas, control.delta)

        idx, s_here = nearest_path_point(plan_path, st.x, st.y, hint)
        hint = idx
        ref = plan_path.samples[idx]
        err = float(lateral_error(st.x, st.y, ref[1], ref[2], ref[3]))
        rows.append(sim.log_row(control, d_ref, diag))
        if sim.t > WARMUP_S and s_here >= metric_start_s:
            errors.append(err)
            speeds.append(v_meas)
            ay_abs.append(abs(diag.ay))
        if abs(err) > DIVERGE_LIMIT:
            diverged = True
            break
        if metric_end_s is not None and s_here >= metric_end_s:
            break

    errors = np.asarray(errors)
    if len(errors) == 0:
        errors = np.zeros(1)
        speeds = [v0]
        ay_abs = [0.0]
    metrics = RunMetrics(
        mae=float(np.mean(np.abs(errors))),
        max_abs_error=float(np.max(np.abs(errors))),
        mean_v=float(np.mean(speeds)),
        max_ay=float(np.max(ay_abs)) / vparams.g,
        errors=errors, diverged=diverged)
    log = np.asarray(rows)
    if log_path is not None:
        _write_csv(log_path, LOG_COLUMNS, log)
    if plan_log_path is not None:
        _write_csv(plan_log_path,
                   ["iter", "t", "cost_min", "cost_mean", "v_cmd0",
                    "delta_cmd0"], plan_rows)
    return metrics, log


def metrics_from_log(log: np.ndarray, path: PathRef,
                     warmup: float = WARMUP_S,
                     start_s: float = 0.0) -> RunMetrics:
    """Recompute run metrics from a stored trajectory log (audit path)."""
    hint = 0
    errors = []
    speeds = []
    ay = []
    for row in log:
        t, x, y = row[0], row[1], row[2]
        idx, _ = nearest_path_point(path, x, y, hint)
        hint = idx
        ref = path.samples[idx]
        if t > warmup and ref[0] >= start_s:
            errors.append(float(lateral_error(x, y, ref[1], ref[2], ref[3])))
            speeds.append(row[7])
            ay.append(abs(row[15]))
    errors = np.asarray(errors) if errors else np.zeros(1)
    return RunMetrics(mae=float(np.mean(np.abs(errors))),
                      max_abs_error=float(np.max(np.abs(errors))),
                      mean_v=float(np.mean(speeds)) if speeds else 0.0,
                      max_ay=float(np.max(ay)) / 9.81 if ay else 0.0,
                      errors=errors)


def compare_report(results, path=None):
    """Rows (v_desired, method, direction, MAE, MaxErr, MeanV, max a_y)
    from {(scenario, method): RunMetrics}; optionally written as CSV."""
    rows = []
    for (scenario, method), m in results.items():
        rows.append([scenario.v_desired, method, scenario.direction,
                     round(m.mae, 4), round(m.max_abs_error, 4),
                     round(m.mean_v, 4), round(m.max_ay, 4)])
    if path is not None:
        _write_csv(path, REPORT_COLUMNS, rows)
    return rows


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(list(row))
