"""Training-set generation: randomized torque/steering excitation of the
9-DoF simulator, logged at 100 Hz, plus sliding-window materialization."""
from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .params import VehicleParams
from .refsim import (FullControl, FullState, NineDofSimulator,
                     NumericalDivergence)
from .slipnet.network import Normalizer, SEQ_LEN

TRAJ_STEPS = 200        # 2 s at 100 Hz
STEP_DT = 0.01
WINDOWS_PER_TRAJ = TRAJ_STEPS - SEQ_LEN
DATASET_COLUMNS = ["traj_id", "step", "vx", "vy", "yaw_rate", "v_cmd",
                   "delta_cmd"]

# speed-banded total-torque ranges (N*m); band edges: V<10, 10<=V<=30, V>30
TORQUE_BANDS = ((0.0, 800.0), (-1000.0, 800.0), (-1000.0, 0.0))
STEER_RANGE = (-0.5, 0.5)
HOLD_RANGE = (0.01, 1.0)
V0_RANGE = (0.0, 35.0)


@dataclass(frozen=True)
class ExcitationPolicy:
    torque_bands: tuple = TORQUE_BANDS
    steer_range: tuple = STEER_RANGE
    hold_range: tuple = HOLD_RANGE
    v0_range: tuple = V0_RANGE
    seed: int = 0


def split_torque(total: float, params: VehicleParams) -> tuple:
    """Positive demand drives the front axle pair; negative (braking) splits
    across all four wheels proportional to static load."""
    if total >= 0.0:
        return (total / 2.0, total / 2.0, 0.0, 0.0)
    wb = params.wheelbase
    front = total * params.l_r / wb / 2.0
    rear = total * params.l_f / wb / 2.0
    return (front, front, rear, rear)


def sample_controls(v: float, rng: np.random.Generator,
                    policy: ExcitationPolicy, params: VehicleParams
                    ) -> FullControl:
    """Uniform draw of (total torque, steering) with the torque band picked
    by current speed."""
    if v < 10.0:
        band = policy.torque_bands[0]
    elif v <= 30.0:
        band = policy.torque_bands[1]
    else:
        band = policy.torque_bands[2]
    total = rng.uniform(*band)
    delta = rng.uniform(*policy.steer_range)
    return FullControl(split_torque(total, params), delta)


def generate_trajectory(sim: NineDofSimulator, policy: ExcitationPolicy,
                        rng: np.random.Generator) -> np.ndarray:
    """One 2-second excitation run; returns a (200, 5) log of
    (Vx, Vy, yaw_rate, V, delta) at 100 Hz.

    Controls are held for a uniformly drawn period, then resampled with the
    torque band of the current speed. Raises NumericalDivergence when the
    simulator blows up (the caller discards and regenerates).
    """
    v0 = rng.uniform(*policy.v0_range)
    sim.reset(FullState.straight_running(v0, sim.params))
    rows = np.empty((TRAJ_STEPS, 5))
    control = sample_controls(v0, rng, policy, sim.params)
    hold_left = rng.uniform(*policy.hold_range)
    for k in range(TRAJ_STEPS):
        if hold_left <= 1e-12:
            st = sim.state
            control = sample_controls(float(np.hypot(st.vx, st.vy)), rng,
                                      policy, sim.params)
            hold_left = rng.uniform(*policy.hold_range)
        sim.advance(control, STEP_DT)
        hold_left -= STEP_DT
        st = sim.state
        rows[k] = (st.vx, st.vy, st.psi_dot,
                   float(np.hypot(st.vx, st.vy)), control.delta)
    return rows


def windows_from_log(log: np.ndarray):
    """Materialize sliding windows (stride 1) from one (steps, 5) trajectory
    log. Row j of a window for target step k pairs the state at t=k-10+j
    with the control applied at t=k-9+j. Returns (histories, targets)."""
    n_win = log.shape[0] - SEQ_LEN
    hists = np.empty((n_win, SEQ_LEN, 5))
    targets = np.empty((n_win, 3))
    for w in range(n_win):
        k = w + SEQ_LEN
        hists[w, :, 0:3] = log[k - SEQ_LEN:k, 0:3]
        hists[w, :, 3:5] = log[k - SEQ_LEN + 1:k + 1, 3:5]
        targets[w] = log[k, 0:3]
    return hists, targets


@dataclass
class SlipDataset:
    """Raw 100 Hz excitation stream plus its sliding-window training view.

    stream: (n_steps, 5) rows (Vx, Vy, yaw_rate, V, delta);
    stream_traj: trajectory id per row. Windows are derived once at
    construction.
    """

    stream: np.ndarray
    stream_traj: np.ndarray
    norm_mean: np.ndarray
    norm_std: np.ndarray
    meta: dict = field(default_factory=dict)
    histories: np.ndarray = field(init=False)
    targets: np.ndarray = field(init=False)
    traj_ids: np.ndarray = field(init=False)

    def __post_init__(self):
        hists, targets, ids = [], [], []
        for t in np.unique(self.stream_traj):
            h, tg = windows_from_log(self.stream[self.stream_traj == t])
            hists.append(h)
            targets.append(tg)
            ids.append(np.full(h.shape[0], t, dtype=int))
        self.histories = np.concatenate(hists, axis=0)
        self.targets = np.concatenate(targets, axis=0)
        self.traj_ids = np.concatenate(ids, axis=0)

    def __len__(self):
        return self.histories.shape[0]

    def v_cmd(self, idx):
        """Speed input paired with the predicted step (channel 3, last row)."""
        return self.histories[idx, -1, 3]

    def delta_cmd(self, idx):
        return self.histories[idx, -1, 4]

    def normalizer(self) -> Normalizer:
        return Normalizer.from_stats(self.norm_mean, self.norm_std)


def lateral_accel_series(log: np.ndarray) -> np.ndarray:
    """Body-frame lateral acceleration a_y = dVy/dt + Vx*psi_dot."""
    dvy = np.gradient(log[:, 1], STEP_DT)
    return dvy + log[:, 0] * log[:, 2]


def params_hash(params: VehicleParams) -> str:
    blob = json.dumps(params.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def build_dataset(n_traj: int, policy: ExcitationPolicy,
                  params: VehicleParams | None = None, log=None) -> SlipDataset:
    """Generate n_traj trajectories and assemble the window dataset.

    Trajectories use per-index seeds spawned from the policy seed, so the
    result is a pure function of (seed, n_traj, params). Diverged runs are
    discarded, regenerated from a fresh spawned stream, and counted in the
    metadata.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    params = params or VehicleParams()
    sim = NineDofSimulator(params)
    children = np.random.SeedSequence(policy.seed).spawn(n_traj)
    retry_seq = np.random.SeedSequence(entropy=policy.seed, spawn_key=(1,))

    logs = []
    diverged = 0
    ay_max = []
    for i in range(n_traj):
        rng = np.random.default_rng(children[i])
        while True:
            try:
                log_arr = generate_trajectory(sim, policy, rng)
                break
            except NumericalDivergence:
                diverged += 1
                rng = np.random.default_rng(retry_seq.spawn(1)[0])
        logs.append(log_arr)
        ay_max.append(np.max(np.abs(lateral_accel_series(log_arr))))
        if log is not None and (i + 1) % 100 == 0:
            log(f"generated {i + 1}/{n_traj} trajectories")

    stream = np.concatenate(logs, axis=0)
    stream_traj = np.repeat(np.arange(n_traj), TRAJ_STEPS)
    frac_07g = float(np.mean(np.asarray(ay_max) >= 0.7 * params.g))
    meta = {
        "seed": policy.seed,
        "n_traj": n_traj,
        "diverged": diverged,
        "divergence_rate": diverged / (n_traj + diverged),
        "params_hash": params_hash(params),
        "frac_traj_ay_above_0.7g": frac_07g,
    }
    ds = SlipDataset(stream, stream_traj, stream.mean(axis=0),
                     stream.std(axis=0), meta)
    ds.meta["n_windows"] = len(ds)
    return ds


def save_dataset(ds: SlipDataset, csv_path, meta_path=None):
    """CSV of the raw per-step stream plus a JSON metadata sidecar
    (seed, counts, parameter hash, normalization statistics)."""
    meta_path = meta_path or str(csv_path) + ".meta.json"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DATASET_COLUMNS)
        step = 0
        prev = None
        for traj, row in zip(ds.stream_traj, ds.stream):
            step = step + 1 if traj == prev else 0
            prev = traj
            writer.writerow([int(traj), step] + [f"{x:.17g}" for x in row])
    meta = dict(ds.meta)
    meta["norm_mean"] = ds.norm_mean.tolist()
    meta["norm_std"] = ds.norm_std.tolist()
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2)


def load_dataset(csv_path, meta_path=None) -> SlipDataset:
    meta_path = meta_path or str(csv_path) + ".meta.json"
    data = np.genfromtxt(csv_path, delimiter=",", names=True)
    with open(meta_path) as fh:
        meta = json.load(fh)
    stream = np.column_stack([data["vx"], data["vy"], data["yaw_rate"],
                              data["v_cmd"], data["delta_cmd"]])
    mean = np.array(meta.pop("norm_mean"))
    std = np.array(meta.pop("norm_std"))
    return SlipDataset(stream, data["traj_id"].astype(int), mean, std, meta)
