"""Trial protocol, termination detection, metrics, and seeded sweeps.

A trial places the robot at a random collision-free pose inside the
lattice and runs the gait until it either traverses (every link center
leaves the lattice bounds), jams (the head stops making progress for a
trailing window), times out, or the integrator diverges.  Distance is the
straight-line start-to-end head displacement and mean speed is distance
over elapsed time.  Sweeps run seeded trials over a parameter grid; the
per-trial seed is derived from (base seed, cell index, trial index) so
tables are reproducible regardless of execution order or worker count.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from itertools import product

import numpy as np

from . import _core
from .cables import RobotGeometry, command_profile
from .controller import ControllerParams, ControllerState, estimate_motor_torque
from .dynamics import (ContactParams, HydroParams, PenaltyParams, Simulation,
                       assemble_state, suggested_profile)
from .gait import GaitParams
from .lattice import Lattice


class StartPoseError(RuntimeError):
    """No collision-free start pose was found."""


class Outcome(str, Enum):
    TRAVERSED = "Traversed"
    JAMMED = "Jammed"
    TIMEOUT = "Timeout"
    DIVERGED = "Diverged"


@dataclass(frozen=True)
class TrialConfig:
    """Everything one trial needs; immutable so sweeps can fan out copies."""

    gait: GaitParams
    geometry: RobotGeometry
    hydro: HydroParams
    contact: ContactParams
    lattice: Lattice
    compliance_mode: str = "fixed"        # "fixed" | "controller"
    G: float = 1.0
    controller: ControllerParams = field(default_factory=ControllerParams)
    penalties: PenaltyParams = field(default_factory=PenaltyParams)
    seed: int = 0
    max_duration: float = 600.0
    jam_window: float = 60.0              # s
    jam_displacement_eps: float = 0.02    # m
    dt: float = 1.0e-3
    command_dt: float = 1.0e-2
    sample_hz: float = 30.0
    start_margin: float = 0.3             # m inside the bounds
    start_pose: tuple[float, float, float] | None = None
    freeze_commands_at: float | None = None

    def __post_init__(self):
        if self.max_duration <= 0 or self.jam_window <= 0:
            raise ValueError("max_duration and jam_window must be positive")
        if self.compliance_mode not in ("fixed", "controller"):
            raise ValueError(f"unknown compliance mode {self.compliance_mode!r}")


@dataclass
class TrialResult:
    outcome: Outcome
    distance_traveled: float
    duration: float
    mean_speed: float
    seed: int
    trajectory: dict  # arrays: t_s, head_x_m, head_y_m, head_theta_rad,
    #                   alpha_rad (n,N), G (n,N), tau_Nm (n,N), contact_count
    max_penetration: float = 0.0
    max_joint_drift: float = 0.0


def sample_start_pose(cfg: TrialConfig, rng: np.random.Generator):
    """Rejection-sample a collision-free pose with all links inside the margin."""
    lat = cfg.lattice
    g = cfg.geometry
    xmin, ymin, xmax, ymax = lat.bounds
    m = cfg.start_margin
    if xmin + m >= xmax - m or ymin + m >= ymax - m:
        raise StartPoseError("bounds too small for the start margin")
    alphas = suggested_profile(0.0, cfg.gait)
    rsum = lat.post_radius + 0.5 * g.link_width
    hl = 0.5 * g.link_length
    for _ in range(10**4):
        x = rng.uniform(xmin + m, xmax - m)
        y = rng.uniform(ymin + m, ymax - m)
        heading = rng.uniform(0.0, 2.0 * math.pi)
        state = assemble_state((x, y), heading, alphas, g)
        ok = True
        for px, py, th in state.link_poses:
            if not (xmin + m <= px <= xmax - m and ymin + m <= py <= ymax - m):
                ok = False
                break
            if lat.n_posts:
                c, s = math.cos(th), math.sin(th)
                ax, ay = px - hl * c, py - hl * s
                dx = lat.post_centers[:, 0] - ax
                dy = lat.post_centers[:, 1] - ay
                t = np.clip(dx * c + dy * s, 0.0, g.link_length)
                d2 = (dx - t * c) ** 2 + (dy - t * s) ** 2
                if d2.min() < rsum * rsum:
                    ok = False
                    break
        if ok:
            return (x, y, heading)
    raise StartPoseError("no collision-free start pose in 1e4 samples")


def _all_links_outside(state, bounds) -> bool:
    xmin, ymin, xmax, ymax = bounds
    x = state.link_poses[:, 0]
    y = state.link_poses[:, 1]
    inside = (x >= xmin) & (x <= xmax) & (y >= ymin) & (y <= ymax)
    return not bool(inside.any())


def run_trial(cfg: TrialConfig) -> TrialResult:
    """Simulate one seeded trial to termination."""
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    g = cfg.geometry
    n_joints = g.joint_count_N
    if cfg.start_pose is not None:
        x0, y0, heading = cfg.start_pose
    else:
        x0, y0, heading = sample_start_pose(cfg, rng)

    sim = Simulation(g, cfg.hydro, cfg.contact, cfg.lattice,
                     cfg.penalties, cfg.dt)
    sim.reset(assemble_state((x0, y0), heading, suggested_profile(0.0, cfg.gait), g))
    substeps = max(1, round(cfg.command_dt / cfg.dt))

    ctrl = None
    if cfg.compliance_mode == "controller":
        ctrl = ControllerState.initial(n_joints, cfg.controller)
        g_vec = ctrl.current_G.copy()
    else:
        g_vec = np.full(n_joints, cfg.G)

    tau_est = np.zeros(n_joints)
    start = sim.state.head_tip(g).copy()
    log = {k: [] for k in ("t", "hx", "hy", "hth", "alpha", "G", "tau", "ncon")}
    sample_dt = 1.0 / cfg.sample_hz

    def take_sample():
        tip = sim.state.head_tip(g)
        log["t"].append(sim.state.time)
        log["hx"].append(float(tip[0]))
        log["hy"].append(float(tip[1]))
        log["hth"].append(float(sim.state.link_poses[0, 2]))
        log["alpha"].append(sim.state.joint_angles.copy())
        log["G"].append(g_vec.copy())
        log["tau"].append(tau_est.copy())
        log["ncon"].append(int(sim.state.contact_flags.sum()))

    take_sample()
    next_sample = sample_dt
    # trailing-window head positions for jam detection: ring buffer filled
    # at command rate
    window_n = max(1, round(cfg.jam_window / cfg.command_dt))
    ring = np.zeros((window_n + 1, 2))
    ring[0] = start
    ring_count = 1

    outcome = Outcome.TIMEOUT
    frozen_profile = None
    max_pen = 0.0
    max_drift = 0.0
    while True:
        t = sim.state.time
        if _all_links_outside(sim.state, cfg.lattice.bounds):
            outcome = Outcome.TRAVERSED
            break
        if ring_count > window_n:
            newest = ring[(ring_count - 1) % (window_n + 1)]
            oldest = ring[(ring_count - 1 - window_n) % (window_n + 1)]
            if np.hypot(*(newest - oldest)) < cfg.jam_displacement_eps:
                outcome = Outcome.JAMMED
                break
        if t >= cfg.max_duration:
            outcome = Outcome.TIMEOUT
            break

        if cfg.freeze_commands_at is not None and t >= cfg.freeze_commands_at:
            if frozen_profile is None:
                frozen_profile = suggested_profile(
                    min(t, cfg.freeze_commands_at), cfg.gait)
            profile = frozen_profile
        else:
            profile = suggested_profile(t, cfg.gait)
        if ctrl is not None:
            g_vec = ctrl.update(tau_est, cfg.command_dt)
        cmd = command_profile(profile, g_vec, cfg.gait, g)
        status = sim.run_block(cmd, substeps)
        for j in range(n_joints):
            tau_est[j] = estimate_motor_torque(
                sim.last_max_tension_l[j], sim.last_max_tension_r[j],
                g.pulley_radius)
        max_pen = max(max_pen, sim.last_diag[_core.DIAG_MAX_PENETRATION])
        max_drift = max(max_drift, sim.last_diag[_core.DIAG_MAX_JOINT_DRIFT])
        if status != _core.STATUS_OK:
            outcome = Outcome.DIVERGED
            break

        ring[ring_count % (window_n + 1)] = sim.state.head_tip(g)
        ring_count += 1
        if sim.state.time >= next_sample - 1e-9:
            take_sample()
            next_sample += sample_dt

    if not log["t"] or log["t"][-1] < sim.state.time:
        take_sample()
    duration = sim.state.time
    end = sim.state.head_tip(g)
    distance = float(np.hypot(*(end - start)))
    speed = distance / duration if duration > 0 else 0.0
    traj = {
        "t_s": np.array(log["t"]),
        "head_x_m": np.array(log["hx"]),
        "head_y_m": np.array(log["hy"]),
        "head_theta_rad": np.array(log["hth"]),
        "alpha_rad": np.array(log["alpha"]),
        "G": np.array(log["G"]),
        "tau_Nm": np.array(log["tau"]),
        "contact_count": np.array(log["ncon"], dtype=int),
    }
    return TrialResult(outcome, distance, duration, speed, cfg.seed, traj,
                       float(max_pen), float(max_drift))


# --------------------------------------------------------------------------
# metrics

def survival_function(distances, jam_flags, d_grid) -> np.ndarray:
    """Fraction of trials whose distance reached at least each grid value.

    S is non-increasing with S(0) = 1.  jam_flags documents which trials
    ended in a jam (the record length is the same either way) and is only
    validated here.
    """
    d = np.asarray(distances, dtype=np.float64)
    flags = np.asarray(jam_flags)
    if d.size == 0:
        raise ValueError("survival_function needs at least one trial")
    if flags.shape != d.shape:
        raise ValueError("distances and jam_flags must have equal length")
    grid = np.asarray(d_grid, dtype=np.float64)
    return (d[None, :] >= grid[:, None]).sum(axis=1) / d.size


def success_rate(results: list[TrialResult]) -> float:
    """Fraction of trials that traversed the lattice."""
    if not results:
        raise ValueError("success_rate needs at least one trial")
    return sum(r.outcome is Outcome.TRAVERSED for r in results) / len(results)


def speed_stats(results: list[TrialResult]) -> tuple[float, float]:
    """Sample mean and sample standard deviation of per-trial mean speeds."""
    if not results:
        raise ValueError("speed_stats needs at least one trial")
    v = np.array([r.mean_speed for r in results], dtype=np.float64)
    mean = float(v.mean())
    std = float(v.std(ddof=1)) if len(v) > 1 else 0.0
    return mean, std


# --------------------------------------------------------------------------
# sweeps

SWEEPABLE = ("G", "A_deg", "xi", "omega_hz", "sigma_m")


def trial_seed(base_seed: int, cell_index: int, trial_index: int) -> int:
    """Stable per-trial seed; independent of execution order."""
    ss = np.random.SeedSequence((base_seed, cell_index, trial_index))
    return int(ss.generate_state(1, np.uint64)[0])


def apply_param(cfg: TrialConfig, name: str, value: float) -> TrialConfig:
    """Return a copy of cfg with one sweepable parameter replaced."""
    if name == "G":
        return replace(cfg, G=float(value))
    if name == "A_deg":
        return replace(cfg, gait=replace(cfg.gait, amplitude_A=math.radians(value)))
    if name == "xi":
        return replace(cfg, gait=replace(cfg.gait, spatial_freq_xi=float(value)))
    if name == "omega_hz":
        return replace(cfg, gait=replace(cfg.gait, temporal_freq_omega=float(value)))
    if name == "sigma_m":
        from .lattice import build_perturbed_lattice, build_regular_lattice
        base = build_regular_lattice(cfg.lattice.spacing, cfg.lattice.post_radius,
                                     cfg.lattice.bounds, cfg.lattice.min_surface_gap)
        lat = build_perturbed_lattice(base, float(value), cfg.lattice.seed)
        return replace(cfg, lattice=lat)
    raise ValueError(f"unknown sweep parameter {name!r}; "
                     f"expected one of {SWEEPABLE}")


@dataclass
class SweepRow:
    cell_index: int
    params: dict
    trial_index: int
    seed: int
    outcome: str
    distance_m: float
    duration_s: float
    speed_mps: float
    error: str = ""


@dataclass
class SweepResult:
    param_names: list[str]
    cells: list[dict]
    rows: list[SweepRow]

    def cell_rows(self, cell_index: int) -> list[SweepRow]:
        return [r for r in self.rows if r.cell_index == cell_index]

    def cell_results(self, cell_index: int) -> list[TrialResult]:
        """Lightweight TrialResult stand-ins for the metric helpers."""
        out = []
        for r in self.cell_rows(cell_index):
            if r.error:
                continue
            out.append(TrialResult(Outcome(r.outcome), r.distance_m,
                                   r.duration_s, r.speed_mps, r.seed, {}))
        return out


def _run_sweep_task(args):
    base_cfg, names, values, cell_index, trial_index, base_seed, keep_traj = args
    cfg = base_cfg
    for name, value in zip(names, values):
        cfg = apply_param(cfg, name, value)
    seed = trial_seed(base_seed, cell_index, trial_index)
    cfg = replace(cfg, seed=seed)
    params = dict(zip(names, values))
    try:
        res = run_trial(cfg)
        return SweepRow(cell_index, params, trial_index, seed,
                        res.outcome.value, res.distance_traveled,
                        res.duration, res.mean_speed)
    except StartPoseError as exc:
        return SweepRow(cell_index, params, trial_index, seed,
                        "", math.nan, math.nan, math.nan, error=str(exc))


def run_sweep(grid: dict, trials_per_cell: int, base: TrialConfig,
              base_seed: int | None = None, workers: int = 1) -> SweepResult:
    """Run trials_per_cell seeded trials for every cell of the grid.

    grid maps sweepable parameter names to value lists; cells are their
    cartesian product in the given key order.  Per-trial setup errors are
    recorded on the row and never abort the sweep.  Output is ordered by
    (cell, trial) index and is identical for any worker count.
    """
    if not grid:
        raise ValueError("empty sweep grid")
    if trials_per_cell < 1:
        raise ValueError("trials_per_cell must be >= 1")
    for name in grid:
        if name not in SWEEPABLE:
            raise ValueError(f"unknown sweep parameter {name!r}; "
                             f"expected one of {SWEEPABLE}")
    if base_seed is None:
        base_seed = base.seed
    names = list(grid.keys())
    cells = [dict(zip(names, vals)) for vals in product(*grid.values())]
    tasks = [(base, names, tuple(cell.values()), ci, ti, base_seed, False)
             for ci, cell in enumerate(cells)
             for ti in range(trials_per_cell)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_sweep_task, tasks, chunksize=1))
    else:
        rows = [_run_sweep_task(t) for t in tasks]
    rows.sort(key=lambda r: (r.cell_index, r.trial_index))
    return SweepResult(names, cells, rows)
