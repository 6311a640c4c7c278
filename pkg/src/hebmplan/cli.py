"""Command-line front-end: data generation, training, closed-loop runs,
evaluation suites, and report/plot emission.

Exit codes: 0 success, 2 usage, 3 data error, 4 numerical divergence.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bench, datagen
from .config import SEED_DATAGEN, derive_seed, load_config
from .params import VehicleParams
from .slipnet import (DataInsufficient, load_weights, save_weights, train)
from .refsim import NumericalDivergence

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_DIVERGED = 4

MAX_DIVERGENCE_RATE = 0.05


def _load_cfg(args, **overrides):
    cfg = load_config(getattr(args, "config", None), overrides)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg.resolve_seeds()


def _echo_config(cfg, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    text = cfg.dump()
    (out_dir / "config_effective.txt").write_text(text)
    print("# effective configuration")
    print(text, end="")


def cmd_datagen(args) -> int:
    cfg = _load_cfg(args)
    if args.n_traj is not None:
        cfg.n_traj = args.n_traj
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    policy = datagen.ExcitationPolicy(seed=derive_seed(cfg.seed, SEED_DATAGEN))
    ds = datagen.build_dataset(cfg.n_traj, policy, cfg.vehicle, log=print)
    datagen.save_dataset(ds, out)
    print(f"dataset: {len(ds)} windows from {cfg.n_traj} trajectories -> {out}")
    print(f"divergence rate: {ds.meta['divergence_rate']:.3f}; "
          f"fraction of trajectories with |a_y| >= 0.7g: "
          f"{ds.meta['frac_traj_ay_above_0.7g']:.3f}")
    if ds.meta["frac_traj_ay_above_0.7g"] == 0.0:
        print("warning: no high-lateral-acceleration coverage at this scale")
    if ds.meta["divergence_rate"] > MAX_DIVERGENCE_RATE:
        print("error: simulator divergence rate above 5%", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _load_cfg(args)
    tc = cfg.training
    if args.epochs is not None:
        tc = replace(tc, epochs=args.epochs)
    if args.lr is not None:
        tc = replace(tc, learning_rate=args.lr)
    try:
        ds = datagen.load_dataset(args.dataset)
    except OSError as exc:
        print(f"error: cannot read dataset: {exc}", file=sys.stderr)
        return EXIT_DATA
    try:
        weights, normalizer, report = train(ds, tc, cfg.vehicle, log=print)
    except DataInsufficient as exc:
        print(f"error: {exc}; generate more trajectories with 'datagen "
              f"--n-traj N' (each adds {datagen.WINDOWS_PER_TRAJ} windows)",
              file=sys.stderr)
        return EXIT_DATA
    save_weights(args.out, weights, normalizer)
    if args.report is not None:
        report.save_csv(args.report)
    if tc.learning_rate == 0.0:
        print("warning: learning rate 0; weights are unchanged from "
              "initialization")
    print(f"best epoch {report.best_epoch}: val {report.best_val_loss:.5f} "
          f"(zero-slip baseline {report.baseline_val_loss:.5f}) -> {args.out}")
    return EXIT_OK


def _make_scenario(args, seed: int) -> bench.Scenario:
    if args.scenario == "oval":
        direction = args.direction or "ccw"
        path = bench.make_oval(v_desired=args.v_desired, direction=direction)
        return bench.Scenario("oval", path, args.v_desired,
                              direction=direction, laps=args.laps, seed=seed)
    if args.scenario == "lane_change":
        path = bench.make_lane_change(v_desired=args.v_desired)
        return bench.Scenario("lane_change", path, args.v_desired,
                              start_speed=8.0, run_up=args.run_up, seed=seed)
    raise ValueError(f"unknown scenario {args.scenario!r}")


def _run_one(scenario, model_name, cfg, weights, normalizer, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    mp = cfg.mppi
    if scenario.run_up > 0 and scenario.name == "lane_change":
        path = bench.make_lane_change(v_desired=scenario.v_desired,
                                      run_up=scenario.run_up)
        scenario = replace(scenario, path=path)
    metrics, log = bench.run_closed_loop(
        scenario, model_name, mp, cfg.vehicle, weights, normalizer,
        log_path=out_dir / "log.csv", plan_log_path=out_dir / "plan_log.csv")
    scenario.path.save_csv(out_dir / "path.csv")
    row = dict(zip(bench.REPORT_COLUMNS,
                   [scenario.v_desired, model_name, scenario.direction,
                    metrics.mae, metrics.max_abs_error, metrics.mean_v,
                    metrics.max_ay]))
    row["diverged"] = metrics.diverged
    row["scenario"] = scenario.name
    row["v_start"] = scenario.start_speed
    (out_dir / "metrics.json").write_text(json.dumps(row, indent=2))
    return metrics


def cmd_run(args) -> int:
    cfg = _load_cfg(args)
    if args.k_samples is not None:
        cfg.mppi = replace(cfg.mppi, k_samples=args.k_samples)
    weights = normalizer = None
    if args.model == "hebm":
        if args.weights is None:
            print("error: --weights required for the hebm model",
                  file=sys.stderr)
            return EXIT_USAGE
        weights, normalizer = load_weights(args.weights)
    try:
        scenario = _make_scenario(args, cfg.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out_dir = Path(args.out_dir or
                   f"{cfg.output_dir}/{scenario.name}_{args.model}_"
                   f"{args.v_desired:g}{scenario.direction}")
    _echo_config(cfg, out_dir)
    try:
        metrics = _run_one(scenario, args.model, cfg, weights, normalizer,
                           out_dir)
    except NumericalDivergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    status = " (DIVERGED)" if metrics.diverged else ""
    print(f"{scenario.name} {args.model} v={args.v_desired}: "
          f"MAE {metrics.mae:.3f} m, max {metrics.max_abs_error:.3f} m, "
          f"mean V {metrics.mean_v:.2f} m/s, "
          f"max a_y {metrics.max_ay:.2f} g{status} -> {out_dir}")
    return EXIT_DIVERGED if metrics.diverged else EXIT_OK


def cmd_eval(args) -> int:
    cfg = _load_cfg(args)
    if args.k_samples is not None:
        cfg.mppi = replace(cfg.mppi, k_samples=args.k_samples)
    weights, normalizer = load_weights(args.weights)
    out_root = Path(args.out_dir or f"{cfg.output_dir}/eval")
    _echo_config(cfg, out_root)
    results = {}
    for spec in args.cases:
        name, v, extra = (spec.split(":") + [""])[:3]
        v = float(v)
        if name == "oval":
            direction = extra or "ccw"
            path = bench.make_oval(v_desired=v, direction=direction)
            scenario = bench.Scenario("oval", path, v, direction=direction,
                                      laps=args.laps, seed=cfg.seed)
        else:
            path = bench.make_lane_change(v_desired=v, run_up=args.run_up)
            scenario = bench.Scenario("lane_change", path, v, start_speed=8.0,
                                      run_up=args.run_up, seed=cfg.seed)
        for model_name in ("hebm", "kbm"):
            tag = f"{name}_{model_name}_{v:g}{scenario.direction}"
            metrics = _run_one(scenario, model_name, cfg, weights, normalizer,
                               out_root / tag)
            results[(scenario, model_name)] = metrics
            print(f"{tag}: MAE {metrics.mae:.3f} mean V {metrics.mean_v:.2f}")
    bench.compare_report(results, out_root / "report.csv")
    print(f"report -> {out_root / 'report.csv'}")
    return EXIT_OK


def cmd_report(args) -> int:
    rows = []
    for run_dir in map(Path, args.run_dirs):
        meta_file = run_dir / "metrics.json"
        if not meta_file.exists():
            print(f"error: {run_dir} has no metrics.json", file=sys.stderr)
            return EXIT_DATA
        row = json.loads(meta_file.read_text())
        rows.append([row[c] for c in bench.REPORT_COLUMNS])
        if args.plots:
            _emit_plots(run_dir)
    out = Path(args.out)
    bench._write_csv(out, bench.REPORT_COLUMNS, rows)
    for row in rows:
        print(",".join(str(x) for x in row))
    print(f"report -> {out}")
    return EXIT_OK


def _emit_plots(run_dir: Path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = np.genfromtxt(run_dir / "path.csv", delimiter=",", names=True)
    log = np.genfromtxt(run_dir / "log.csv", delimiter=",", names=True)
    fig, ax = plt.subplots(figsize=(7, 5))
    ax.plot(path["x"], path["y"], "k--", label="reference")
    ax.plot(log["x"], log["y"], "b-", label="vehicle")
    ax.set_aspect("equal")
    ax.set_xlabel("X [m]")
    ax.set_ylabel("Y [m]")
    ax.legend()
    fig.savefig(run_dir / "trajectory.svg")
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(7, 3))
    ax.plot(path["s"], path["kappa"])
    ax.set_xlabel("arclength [m]")
    ax.set_ylabel("curvature [1/m]")
    fig.savefig(run_dir / "curvature.svg")
    plt.close(fig)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hebmplan",
        description="hybrid bicycle-model trajectory planning toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value configuration file")
        p.add_argument("--seed", type=int, help="global seed override")

    p = sub.add_parser("datagen", help="generate the training dataset")
    common(p)
    p.add_argument("--n-traj", type=int, help="number of 2 s trajectories")
    p.add_argument("--out", default="dataset.csv")
    p.set_defaults(func=cmd_datagen)

    p = sub.add_parser("train", help="train the slip predictor")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", default="weights.hebm")
    p.add_argument("--report", help="per-epoch loss CSV")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("run", help="closed-loop run of one scenario")
    common(p)
    p.add_argument("--scenario", required=True,
                   choices=["oval", "lane_change"])
    p.add_argument("--v-desired", type=float, required=True)
    p.add_argument("--direction", choices=["cw", "ccw"])
    p.add_argument("--laps", type=float, default=1.0)
    p.add_argument("--run-up", type=float, default=120.0,
                   help="straight run-up before the lane change [m]")
    p.add_argument("--model", choices=["hebm", "kbm"], default="hebm")
    p.add_argument("--weights")
    p.add_argument("--k-samples", type=int)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="run a HEBM-vs-KBM comparison suite")
    common(p)
    p.add_argument("--weights", required=True)
    p.add_argument("--cases", nargs="+", required=True,
                   metavar="SCEN:V[:DIR]",
                   help="e.g. oval:14:ccw lane_change:20")
    p.add_argument("--laps", type=float, default=1.0)
    p.add_argument("--run-up", type=float, default=120.0)
    p.add_argument("--k-samples", type=int)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="combine stored runs into one table")
    p.add_argument("run_dirs", nargs="+")
    p.add_argument("--out", default="report.csv")
    p.add_argument("--plots", action="store_true",
                   help="emit trajectory/curvature SVGs per run")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
