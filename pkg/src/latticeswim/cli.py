"""Command-line entry point.

Subcommands:
  run      one trial from a config file; writes trial.json, trajectory.csv,
           lattice.txt and (in controller mode) controller.csv
  sweep    seeded parameter sweep; writes sweep.csv, summary.csv, survival.csv
  lattice  generate and serialize a lattice
  replay   render a finished trial directory to SVG

Exit codes: 0 success, 2 usage/config error, 3 internal/divergence error.
"""

import argparse
import csv
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, DEFAULT_CONFIG, build_trial_config, load_config
from .experiments import (Outcome, StartPoseError, run_sweep, run_trial,
                          speed_stats, success_rate, survival_function)
from .lattice import (LatticeError, build_perturbed_lattice,
                      build_regular_lattice, load_lattice, save_lattice)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INTERNAL = 3

SURVIVAL_GRID = np.round(np.arange(0.0, 3.0001, 0.1), 10)


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_trial_outputs(res, cfg, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    traj = res.trajectory
    n = cfg.gait.joint_count_N
    header = ["t_s", "head_x_m", "head_y_m", "head_theta_rad"] + \
        [f"alpha_{j + 1}_rad" for j in range(n)] + ["contact_count"]
    rows = []
    for i in range(len(traj["t_s"])):
        rows.append([traj["t_s"][i], traj["head_x_m"][i], traj["head_y_m"][i],
                     traj["head_theta_rad"][i]]
                    + list(traj["alpha_rad"][i]) + [traj["contact_count"][i]])
    _write_csv(out_dir / "trajectory.csv", header, rows)
    if cfg.compliance_mode == "controller":
        header = ["t_s"] + [f"G_{j + 1}" for j in range(n)] + \
            [f"tau_{j + 1}_Nm" for j in range(n)]
        rows = [[traj["t_s"][i]] + list(traj["G"][i]) + list(traj["tau_Nm"][i])
                for i in range(len(traj["t_s"]))]
        _write_csv(out_dir / "controller.csv", header, rows)
    save_lattice(cfg.lattice, out_dir / "lattice.txt")
    summary = {
        "outcome": res.outcome.value,
        "distance_m": res.distance_traveled,
        "duration_s": res.duration,
        "mean_speed_mps": res.mean_speed,
        "seed": res.seed,
        "samples": len(traj["t_s"]),
        "max_penetration_m": res.max_penetration,
        "max_joint_drift_m": res.max_joint_drift,
    }
    with open(out_dir / "trial.json", "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")


def cmd_run(args) -> int:
    try:
        cfg_dict = load_config(args.config) if args.config else \
            json.loads(json.dumps(DEFAULT_CONFIG))
        tc = build_trial_config(cfg_dict)
        if args.seed is not None:
            tc = replace(tc, seed=args.seed)
    except (ConfigError, LatticeError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        res = run_trial(tc)
    except StartPoseError as exc:
        print(f"setup error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    write_trial_outputs(res, tc, Path(args.out))
    print(f"{res.outcome.value}: distance {res.distance_traveled:.3f} m in "
          f"{res.duration:.1f} s ({res.mean_speed:.4f} m/s)")
    if res.outcome is Outcome.DIVERGED:
        return EXIT_INTERNAL
    return EXIT_OK


def _parse_param(spec: str):
    try:
        name, rng = spec.split("=", 1)
        start, step, stop = (float(x) for x in rng.split(":"))
    except ValueError:
        raise ConfigError(
            f"--param must look like name=start:step:stop, got {spec!r}")
    if step <= 0:
        raise ConfigError("--param step must be positive")
    values = []
    k = 0
    while True:
        v = start + k * step
        if v > stop + 1e-9 * max(1.0, abs(step)):
            break
        values.append(round(v, 12))
        k += 1
    if not values:
        raise ConfigError(f"--param {spec!r} yields no values")
    return name, values


def write_sweep_outputs(sweep, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    names = sweep.param_names
    header = names + ["trial_id", "seed", "outcome", "distance_m",
                      "duration_s", "speed_mps", "error"]
    rows = [[r.params[n] for n in names]
            + [r.trial_index, r.seed, r.outcome, r.distance_m, r.duration_s,
               r.speed_mps, r.error]
            for r in sweep.rows]
    _write_csv(out_dir / "sweep.csv", header, rows)

    sum_header = names + ["n_trials", "success_rate", "mean_speed_mps",
                          "std_speed_mps"]
    sum_rows = []
    surv_rows = []
    for ci, cell in enumerate(sweep.cells):
        results = sweep.cell_results(ci)
        if results:
            rate = success_rate(results)
            mean, std = speed_stats(results)
            dist = [r.distance_traveled for r in results]
            flags = [r.outcome is Outcome.JAMMED for r in results]
            surv = survival_function(dist, flags, SURVIVAL_GRID)
        else:
            rate, mean, std = math.nan, math.nan, math.nan
            surv = np.full(len(SURVIVAL_GRID), math.nan)
        sum_rows.append([cell[n] for n in names] + [len(results), rate, mean, std])
        for d, s in zip(SURVIVAL_GRID, surv):
            surv_rows.append([cell[n] for n in names] + [d, s])
    _write_csv(out_dir / "summary.csv", sum_header, sum_rows)
    _write_csv(out_dir / "survival.csv", names + ["d_m", "survival"], surv_rows)


def cmd_sweep(args) -> int:
    try:
        cfg_dict = load_config(args.config) if args.config else \
            json.loads(json.dumps(DEFAULT_CONFIG))
        tc = build_trial_config(cfg_dict)
        grid = {}
        for spec in args.param:
            name, values = _parse_param(spec)
            grid[name] = values
        if not grid:
            raise ConfigError("at least one --param is required")
        sweep = run_sweep(grid, args.trials, tc, base_seed=args.seed,
                          workers=args.workers)
    except (ConfigError, LatticeError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    write_sweep_outputs(sweep, Path(args.out))
    print(f"{len(sweep.cells)} cells x {args.trials} trials -> {args.out}")
    return EXIT_OK


def cmd_lattice(args) -> int:
    try:
        bounds = (-args.bounds / 2, -args.bounds / 2,
                  args.bounds / 2, args.bounds / 2)
        lat = build_regular_lattice(args.spacing, args.radius, bounds)
        if args.mode == "perturbed":
            lat = build_perturbed_lattice(lat, args.sigma, args.seed)
    except LatticeError as exc:
        print(f"lattice error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    save_lattice(lat, args.out)
    print(f"{lat.n_posts} posts -> {args.out}")
    return EXIT_OK


def cmd_replay(args) -> int:
    from .config import build_trial_config  # noqa: F401  (geometry defaults)
    from .render import render_g_plot, render_scene_svg, render_speed_plot
    from .cables import RobotGeometry

    trial_dir = Path(args.trial)
    traj_path = trial_dir / "trajectory.csv"
    lat_path = trial_dir / "lattice.txt"
    if not traj_path.exists() or not lat_path.exists():
        print(f"missing trial files in {trial_dir}", file=sys.stderr)
        return EXIT_USAGE
    with open(traj_path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader)
        data = [[float(v) for v in row] for row in reader]
    if not data:
        print("empty trajectory", file=sys.stderr)
        return EXIT_USAGE
    arr = np.array(data)
    cols = {name: i for i, name in enumerate(header)}
    alpha_cols = [i for name, i in cols.items() if name.startswith("alpha_")]
    traj = {
        "t_s": arr[:, cols["t_s"]],
        "head_x_m": arr[:, cols["head_x_m"]],
        "head_y_m": arr[:, cols["head_y_m"]],
        "head_theta_rad": arr[:, cols["head_theta_rad"]],
        "alpha_rad": arr[:, alpha_cols],
    }
    try:
        lat = load_lattice(lat_path)
    except LatticeError as exc:
        print(f"lattice error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    n_joints = len(alpha_cols)
    geom = RobotGeometry(joint_count_N=n_joints,
                         total_length=(n_joints + 1) * 0.11)
    out_svg = Path(args.svg)
    render_scene_svg(traj, lat, geom, out_svg)
    render_speed_plot(traj, out_svg.with_name(out_svg.stem + "_speed.svg"))
    ctrl_path = trial_dir / "controller.csv"
    if ctrl_path.exists():
        with open(ctrl_path, newline="", encoding="utf-8") as f:
            reader = csv.reader(f)
            cheader = next(reader)
            cdata = np.array([[float(v) for v in row] for row in reader])
        g_cols = [i for i, name in enumerate(cheader) if name.startswith("G_")]
        render_g_plot({"t_s": cdata[:, 0], "G": cdata[:, g_cols]},
                      out_svg.with_name(out_svg.stem + "_g.svg"))
    print(f"rendered {out_svg}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="latticeswim", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one trial")
    p.add_argument("config", nargs="?", default=None, help="JSON config path")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a parameter sweep")
    p.add_argument("config", nargs="?", default=None)
    p.add_argument("--param", action="append", default=[],
                   metavar="name=start:step:stop",
                   help="sweepable: G, A_deg, xi, omega_hz, sigma_m")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="sweep_out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("lattice", help="generate a lattice file")
    p.add_argument("--mode", choices=("regular", "perturbed"), default="regular")
    p.add_argument("--spacing", type=float, default=0.25)
    p.add_argument("--radius", type=float, default=0.045)
    p.add_argument("--bounds", type=float, default=2.0)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="lattice.txt")
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("replay", help="render a trial directory to SVG")
    p.add_argument("--trial", required=True)
    p.add_argument("--svg", required=True)
    p.set_defaults(func=cmd_replay)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # internal errors -> exit 3, per contract
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
