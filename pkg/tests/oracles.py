"""Independent reference implementations used as test oracles.

Everything here is deliberately written from scratch (scalar Python loops,
no reuse of the package's vectorized code paths) so agreement between the
package and these oracles is meaningful evidence of correctness.
"""
from __future__ import annotations

import math


def sigmoid(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


def matvec(mat, vec):
    return [sum(row[j] * vec[j] for j in range(len(vec))) for row in mat]


def lstm_sequence(x_seq, w, u, b, hidden):
    """Scalar-loop LSTM over one sequence of input lists.

    Gate order in the stacked matrices is (input, forget, cell, output);
    initial hidden and cell states are zero. Returns the list of hidden
    states, one per timestep.
    """
    h = [0.0] * hidden
    c = [0.0] * hidden
    states = []
    for x_t in x_seq:
        z = matvec(w, x_t)
        zu = matvec(u, h)
        z = [z[j] + zu[j] + b[j] for j in range(4 * hidden)]
        i_g = [sigmoid(z[j]) for j in range(0, hidden)]
        f_g = [sigmoid(z[j]) for j in range(hidden, 2 * hidden)]
        g_g = [math.tanh(z[j]) for j in range(2 * hidden, 3 * hidden)]
        o_g = [sigmoid(z[j]) for j in range(3 * hidden, 4 * hidden)]
        c = [f_g[j] * c[j] + i_g[j] * g_g[j] for j in range(hidden)]
        h = [o_g[j] * math.tanh(c[j]) for j in range(hidden)]
        states.append(h)
    return states


def slip_network_forward(history, weights, norm_mean, norm_scale):
    """Full reference forward pass for one (10, 5) history window.

    Mirrors the documented architecture: normalization, LSTM 5->32->64,
    dense 64->128->256->128 with ReLU between dense layers, linear 2-output
    head. All arguments are plain nested lists / weight dict of arrays
    (indexed elementwise only).
    """
    xn = [[(history[t][j] - norm_mean[j]) / norm_scale[j] for j in range(5)]
          for t in range(len(history))]
    h1_seq = lstm_sequence(xn, weights["lstm1_W"].tolist(),
                           weights["lstm1_U"].tolist(),
                           weights["lstm1_b"].tolist(), 32)
    h2_seq = lstm_sequence(h1_seq, weights["lstm2_W"].tolist(),
                           weights["lstm2_U"].tolist(),
                           weights["lstm2_b"].tolist(), 64)
    a = h2_seq[-1]
    for name in ("fc1", "fc2", "fc3"):
        w = weights[f"{name}_W"].tolist()
        b = weights[f"{name}_b"].tolist()
        a = [max(v + b[i], 0.0) for i, v in enumerate(matvec(w, a))]
    w = weights["out_W"].tolist()
    b = weights["out_b"].tolist()
    return [v + b[i] for i, v in enumerate(matvec(w, a))]


def nearest_index_bruteforce(xy, x, y):
    """Exhaustive nearest-sample search with ties toward the larger index."""
    best, best_d2 = 0, float("inf")
    for i, (px, py) in enumerate(xy):
        d2 = (px - x) ** 2 + (py - y) ** 2
        if d2 <= best_d2:
            best, best_d2 = i, d2
    return best


def pacejka_scalar(slip, fz, b, c, d_scale, e, mu):
    """Scalar magic-formula evaluation (independent of the package's)."""
    d = d_scale * mu * max(fz, 0.0)
    bs = b * slip
    return d * math.sin(c * math.atan(bs - e * (bs - math.atan(bs))))


def savgol_point(seq, center, window, order):
    """Least-squares polynomial fit around one point of a mirror-padded
    sequence, evaluated at that point (naive per-point oracle)."""
    half = window // 2
    n = len(seq)
    xs, ys = [], []
    for off in range(-half, half + 1):
        idx = center + off
        # mirror padding without repeating the edge sample
        if idx < 0:
            idx = -idx
        elif idx >= n:
            idx = 2 * (n - 1) - idx
        xs.append(float(off))
        ys.append(seq[idx])
    # solve the (order+1) normal equations by Gaussian elimination
    m = order + 1
    a = [[sum(x ** (i + j) for x in xs) for j in range(m)] for i in range(m)]
    rhs = [sum(ys[k] * xs[k] ** i for k in range(len(xs))) for i in range(m)]
    for col in range(m):
        piv = max(range(col, m), key=lambda r: abs(a[r][col]))
        a[col], a[piv] = a[piv], a[col]
        rhs[col], rhs[piv] = rhs[piv], rhs[col]
        for r in range(col + 1, m):
            f = a[r][col] / a[col][col]
            for cc in range(col, m):
                a[r][cc] -= f * a[col][cc]
            rhs[r] -= f * rhs[col]
    coef = [0.0] * m
    for r in range(m - 1, -1, -1):
        coef[r] = (rhs[r] - sum(a[r][cc] * coef[cc]
                                for cc in range(r + 1, m))) / a[r][r]
    return coef[0]  # polynomial value at offset 0
