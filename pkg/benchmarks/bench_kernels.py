"""Throughput comparison of the simulation kernels (compiled vs numpy).

Runs the same excitation sequence through every available backend, checks
that the trajectories agree bitwise, and reports wall time per simulated
second. Usage: python benchmarks/bench_kernels.py [--sim-seconds S]
"""
import argparse
import time

import numpy as np

from hebmplan.datagen import split_torque
from hebmplan.params import VehicleParams
from hebmplan.refsim.core import available_backends
from hebmplan.refsim.simulator import FullState, pack_params

DT_INNER = 1e-4
CTRL_DT = 0.01


def run_backend(kernel, sim_seconds: float, params: VehicleParams):
    p = pack_params(params)
    state = np.asarray(FullState.straight_running(15.0, params).as_array())
    rng = np.random.default_rng(42)
    n_ctrl = int(round(sim_seconds / CTRL_DT))
    n_sub = int(round(CTRL_DT / DT_INNER))
    controls = np.empty((n_ctrl, 5))
    for i in range(n_ctrl):
        if i % 30 == 0:
            torques = split_torque(rng.uniform(-200.0, 400.0), params)
            delta = rng.uniform(-0.05, 0.05)
            ctrl = np.array([*torques, delta])
        controls[i] = ctrl
    t0 = time.perf_counter()
    for i in range(n_ctrl):
        state, _, ok = kernel.advance(state, controls[i], p, DT_INNER, n_sub)
        if not ok:
            raise RuntimeError("simulation diverged during benchmark")
    elapsed = time.perf_counter() - t0
    return elapsed, state


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sim-seconds", type=float, default=5.0)
    args = ap.parse_args()

    params = VehicleParams()
    backends = available_backends()
    print(f"backends available: {', '.join(backends)}")
    results = {}
    for name, kernel in backends.items():
        elapsed, final = run_backend(kernel, args.sim_seconds, params)
        results[name] = (elapsed, final)
        print(f"{name:>8}: {elapsed:8.3f} s wall for {args.sim_seconds:.1f} "
              f"simulated s  ({elapsed / args.sim_seconds:7.3f} s/sim-s)")
    if len(results) == 2:
        t_py = results["python"][0]
        t_cy = results["cython"][0]
        diff = np.max(np.abs(results["python"][1] - results["cython"][1]))
        print(f"speedup (cython vs python): {t_py / t_cy:.1f}x")
        print(f"final-state max abs difference: {diff:.3e}")


if __name__ == "__main__":
    main()
