"""Frame transforms and arclength-parameterized reference paths."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi

# Reference paths are resampled to this spacing so nearest-point projection
# error stays well below measurement tolerances.
PATH_SPACING = 0.1


def wrap_to_pi(angle):
    """Wrap an angle (scalar or array) into (-pi, pi]."""
    wrapped = np.mod(-np.asarray(angle) + np.pi, TWO_PI)
    out = -(wrapped - np.pi)
    return float(out) if np.isscalar(angle) else out


def world_to_body(psi, x_dot, y_dot):
    """Rotate inertial velocities into the vehicle frame.

    Vx = Ydot*sin(psi) + Xdot*cos(psi); Vy = Ydot*cos(psi) - Xdot*sin(psi).
    """
    c, s = np.cos(psi), np.sin(psi)
    vx = y_dot * s + x_dot * c
    vy = y_dot * c - x_dot * s
    return vx, vy


def body_to_world(psi, vx, vy):
    """Inverse of :func:`world_to_body`."""
    c, s = np.cos(psi), np.sin(psi)
    x_dot = vx * c - vy * s
    y_dot = vx * s + vy * c
    return x_dot, y_dot


@dataclass(frozen=True)
class PathRef:
    """Reference path sampled by arclength, plus the desired speed.

    ``samples`` is an (n, 5) array with columns (s, x, y, psi, kappa).
    Heading is stored unwrapped so oval laps stay continuous.
    """

    samples: np.ndarray
    v_desired: float

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.samples, dtype=np.float64))
        if arr.ndim != 2 or arr.shape[1] != 5 or arr.shape[0] == 0:
            raise ValueError("samples must be a non-empty (n, 5) array")
        ds = np.diff(arr[:, 0])
        if arr.shape[0] > 1:
            if not np.all(ds > 0):
                raise ValueError("arclength must be strictly increasing")
            if np.max(ds) > 0.5 + 1e-12:
                raise ValueError("sample spacing must be <= 0.5 m")
            if np.max(np.abs(np.diff(arr[:, 3]))) > np.pi / 2:
                raise ValueError("heading must be unwrapped/continuous")
        object.__setattr__(self, "samples", arr)
        self.samples.setflags(write=False)

    def __len__(self):
        return self.samples.shape[0]

    @property
    def s(self):
        return self.samples[:, 0]

    @property
    def xy(self):
        return self.samples[:, 1:3]

    @property
    def psi(self):
        return self.samples[:, 3]

    @property
    def kappa(self):
        return self.samples[:, 4]

    @property
    def length(self) -> float:
        return float(self.samples[-1, 0] - self.samples[0, 0])

    def is_closed(self, tol: float = 0.01) -> bool:
        return bool(np.hypot(*(self.samples[-1, 1:3] - self.samples[0, 1:3])) <= tol)

    def save_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["s", "x", "y", "psi", "kappa"])
            writer.writerows(self.samples.tolist())

    @classmethod
    def load_csv(cls, path, v_desired: float) -> "PathRef":
        data = np.genfromtxt(path, delimiter=",", names=True)
        arr = np.column_stack([data["s"], data["x"], data["y"],
                               data["psi"], data["kappa"]])
        return cls(arr, v_desired)


def path_from_xy(x, y, v_desired: float, spacing: float = PATH_SPACING) -> PathRef:
    """Build a PathRef from a dense polyline: computes arclength, unwrapped
    heading and finite-difference curvature, then resamples at ``spacing``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    ds = np.hypot(np.diff(x), np.diff(y))
    s = np.concatenate([[0.0], np.cumsum(ds)])
    s_new = np.arange(0.0, s[-1], spacing)
    if s_new[-1] < s[-1] - 1e-9:
        s_new = np.concatenate([s_new, [s[-1]]])
    xi = np.interp(s_new, s, x)
    yi = np.interp(s_new, s, y)
    psi = np.unwrap(np.arctan2(np.gradient(yi, s_new), np.gradient(xi, s_new)))
    kappa = np.gradient(psi, s_new)
    return PathRef(np.column_stack([s_new, xi, yi, psi, kappa]), v_desired)


def nearest_path_point(path: PathRef, x: float, y: float, hint: int = 0,
                       window: int = 200) -> tuple[int, float]:
    """Index and arclength of the path sample closest to (x, y).

    Searches a window around ``hint`` (monotone-progress assumption); if the
    hinted window does not contain an interior minimum the full path is
    scanned. Ties break toward larger arclength.
    """
    n = len(path)
    lo = max(0, hint - window)
    hi = min(n, hint + window + 1)
    idx = _argmin_tie_high(path.xy[lo:hi], x, y) + lo
    if (idx == lo and lo > 0) or (idx == hi - 1 and hi < n):
        idx = _argmin_tie_high(path.xy, x, y)
    return idx, float(path.s[idx])


def _argmin_tie_high(xy, x, y):
    d2 = (xy[:, 0] - x) ** 2 + (xy[:, 1] - y) ** 2
    # argmin on the reversed array picks the *last* minimum of the original
    return d2.shape[0] - 1 - int(np.argmin(d2[::-1]))


def nearest_path_points_batch(path: PathRef, xs, ys, hints, window: int = 80):
    """Vectorized windowed nearest-point search for K query points.

    Returns the array of nearest sample indices (same shape as ``xs``).
    Used by the planner where each rollout advances monotonically.
    """
    xs = np.asarray(xs)
    ys = np.asarray(ys)
    hints = np.asarray(hints, dtype=np.intp)
    n = len(path)
    offs = np.arange(-window, window + 1)
    idx = np.clip(hints[:, None] + offs[None, :], 0, n - 1)
    px = path.samples[:, 1][idx]
    py = path.samples[:, 2][idx]
    d2 = (px - xs[:, None]) ** 2 + (py - ys[:, None]) ** 2
    col = d2.shape[1] - 1 - np.argmin(d2[:, ::-1], axis=1)
    return idx[np.arange(idx.shape[0]), col]
