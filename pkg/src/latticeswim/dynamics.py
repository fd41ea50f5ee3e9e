"""Planar multibody dynamics of the swimmer on the water surface.

Surface swimming reduces to 2D: buoyancy cancels gravity and there is no
vertical motion.  The chain of joint_count_N + 1 links is simulated in
maximal coordinates with penalty joints (see _core), anisotropic
quadratic drag with normal-direction added mass, and rigid-post contact.
The fixed-timestep semi-implicit Euler integrator is deterministic:
identical inputs give bit-identical trajectories.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _core
from .cables import CableCommand, RobotGeometry, command_profile
from .gait import GaitParams, suggested_profile
from .lattice import Lattice, empty_lattice


class SimulationDivergedError(RuntimeError):
    """The integrator produced a non-finite state."""


@dataclass(frozen=True)
class HydroParams:
    """Quadratic resistive-drag model of the water surface.

    Normal drag must exceed tangential drag: the anisotropy is what turns
    body undulation into thrust.  added_mass_coef_normal scales the
    displaced-fluid mass added on the link-normal direction (and the
    matching rotational added inertia).
    """

    fluid_density: float = 1000.0
    drag_coef_normal_Cn: float = 2.0
    drag_coef_tangential_Ct: float = 0.2
    rotational_drag_coef: float = 2.0
    added_mass_coef_normal: float = 1.0

    def __post_init__(self):
        if not (self.drag_coef_normal_Cn > self.drag_coef_tangential_Ct > 0.0):
            raise ValueError(
                "anisotropy required: drag_coef_normal_Cn > drag_coef_tangential_Ct > 0")
        if self.fluid_density <= 0:
            raise ValueError("fluid_density must be positive")
        if self.rotational_drag_coef < 0 or self.added_mass_coef_normal < 0:
            raise ValueError("drag/added-mass coefficients must be >= 0")


@dataclass(frozen=True)
class ContactParams:
    """Penalty contact against the rigid posts."""

    normal_stiffness: float = 1.0e4
    normal_damping: float = 50.0
    friction_mu: float = 0.1
    v_regularization: float = 1.0e-3  # m/s, Coulomb friction ramp

    def __post_init__(self):
        if self.normal_stiffness <= 0:
            raise ValueError("normal_stiffness must be positive")
        if self.friction_mu < 0:
            raise ValueError("friction_mu must be >= 0")


@dataclass(frozen=True)
class PenaltyParams:
    """Internal penalty constants of the maximal-coordinate formulation."""

    k_cable: float = 2.0e4    # N/m, one-sided cable spring
    c_cable: float = 50.0     # N*s/m, cable lengthening damping
    max_tension: float = 140.0  # N, servo stall torque / pulley radius
    k_joint: float = 5.0e4    # N/m, joint attachment spring
    c_joint: float = 40.0     # N*s/m
    k_limit: float = 100.0    # N*m/rad, mechanical stop
    c_limit: float = 0.5      # N*m*s/rad


DT_MAX = 2.0e-3


@dataclass
class RobotState:
    """Full kinematic state of the chain at one instant.

    link_poses is (n_links, 3) of COM x, y, theta; link_velocities the
    matching (vx, vy, omega).  contact_flags marks links touching a post
    after the last step.
    """

    time: float
    link_poses: np.ndarray
    link_velocities: np.ndarray
    contact_flags: np.ndarray

    def copy(self) -> "RobotState":
        return RobotState(self.time, self.link_poses.copy(),
                          self.link_velocities.copy(),
                          self.contact_flags.copy())

    @property
    def n_links(self) -> int:
        return len(self.link_poses)

    def head_tip(self, g: RobotGeometry) -> np.ndarray:
        """Front end of the head link (the tracked point)."""
        x, y, th = self.link_poses[0]
        hl = 0.5 * g.link_length
        return np.array([x + hl * math.cos(th), y + hl * math.sin(th)])

    def head_pose(self, g: RobotGeometry) -> tuple[float, float, float]:
        tip = self.head_tip(g)
        return float(tip[0]), float(tip[1]), float(self.link_poses[0, 2])

    @property
    def joint_angles(self) -> np.ndarray:
        """Realized joint angles alpha_i = theta_i - theta_{i-1}, wrapped."""
        d = np.diff(self.link_poses[:, 2])
        return (d + np.pi) % (2.0 * np.pi) - np.pi

    def kinetic_energy(self, g: RobotGeometry) -> float:
        """Body kinetic energy (excludes hydrodynamic added mass)."""
        i_link = g.link_mass * g.link_length ** 2 / 12.0
        v2 = np.sum(self.link_velocities[:, :2] ** 2, axis=1)
        w2 = self.link_velocities[:, 2] ** 2
        return float(0.5 * np.sum(g.link_mass * v2 + i_link * w2))


def assemble_state(head_tip_xy, heading: float, joint_angles,
                   g: RobotGeometry, time: float = 0.0) -> RobotState:
    """Build a chain at rest from the head tip position and joint angles.

    heading is the mean body axis (average link orientation), which is
    the direction the undulating robot actually travels; the head link's
    own angle oscillates about it with the wave.
    """
    alphas = np.asarray(joint_angles, dtype=np.float64)
    if len(alphas) != g.joint_count_N:
        raise ValueError("need one joint angle per joint")
    n = g.n_links
    hl = 0.5 * g.link_length
    # link orientations relative to the head link, then recentered so the
    # body-average orientation equals the requested heading
    rel = np.concatenate(([0.0], np.cumsum(alphas)))
    thetas = rel - rel.mean() + float(heading)
    poses = np.zeros((n, 3))
    poses[0, 2] = thetas[0]
    poses[0, 0] = head_tip_xy[0] - hl * math.cos(thetas[0])
    poses[0, 1] = head_tip_xy[1] - hl * math.sin(thetas[0])
    for j in range(g.joint_count_N):
        pivot_x = poses[j, 0] - hl * math.cos(poses[j, 2])
        pivot_y = poses[j, 1] - hl * math.sin(poses[j, 2])
        poses[j + 1, 2] = thetas[j + 1]
        poses[j + 1, 0] = pivot_x - hl * math.cos(thetas[j + 1])
        poses[j + 1, 1] = pivot_y - hl * math.sin(thetas[j + 1])
    return RobotState(time, poses, np.zeros((n, 3)),
                      np.zeros(n, dtype=np.int8))


def drag_wrench(link_pose, link_velocity, h: HydroParams,
                g: RobotGeometry) -> tuple[np.ndarray, float]:
    """Quadratic anisotropic drag wrench on one link.

    Returns (force_xy, torque).  Drag power force.v + torque*omega is
    always <= 0.
    """
    x, y, th = link_pose
    vx, vy, w = link_velocity
    if not all(map(math.isfinite, (x, y, th, vx, vy, w))):
        raise ValueError("non-finite link state")
    c, s = math.cos(th), math.sin(th)
    vt = vx * c + vy * s
    vn = -vx * s + vy * c
    area = g.link_length * g.link_width
    ft = -0.5 * h.fluid_density * h.drag_coef_tangential_Ct * area * abs(vt) * vt
    fn = -0.5 * h.fluid_density * h.drag_coef_normal_Cn * area * abs(vn) * vn
    torque = -0.5 * h.fluid_density * h.rotational_drag_coef * g.link_width \
        * g.link_length ** 4 / 32.0 * abs(w) * w
    return np.array([ft * c - fn * s, ft * s + fn * c]), torque


def contact_forces(s: RobotState, lat: Lattice, cp: ContactParams,
                   g: RobotGeometry) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Capsule-vs-post penalty contact wrenches.

    Returns ((n_links, 3) of fx, fy, torque about each link COM, and the
    list of (link, post) contact pairs).  Normal force is a one-sided
    spring plus damping only while approaching; friction is Coulomb,
    clamped at mu*|Fn| with a small linear ramp near zero sliding speed.
    """
    wrenches = np.zeros((s.n_links, 3))
    pairs: list[tuple[int, int]] = []
    hl = 0.5 * g.link_length
    wr = 0.5 * g.link_width
    rsum = lat.post_radius + wr
    for k in range(s.n_links):
        x, y, th = s.link_poses[k]
        c, si = math.cos(th), math.sin(th)
        ax, ay = x - hl * c, y - hl * si
        for q in range(lat.n_posts):
            px, py = lat.post_centers[q]
            tpar = (px - ax) * c + (py - ay) * si
            tpar = min(max(tpar, 0.0), g.link_length)
            qx, qy = ax + tpar * c, ay + tpar * si
            nx, ny = qx - px, qy - py
            dist = math.hypot(nx, ny)
            if dist >= rsum:
                continue
            if dist > 1e-12:
                nx, ny = nx / dist, ny / dist
            else:
                nx, ny = 1.0, 0.0
            pen = rsum - dist
            rx = qx - wr * nx - x
            ry = qy - wr * ny - y
            vpx = s.link_velocities[k, 0] - s.link_velocities[k, 2] * ry
            vpy = s.link_velocities[k, 1] + s.link_velocities[k, 2] * rx
            vn = vpx * nx + vpy * ny
            f_norm = cp.normal_stiffness * pen + \
                (cp.normal_damping * (-vn) if vn < 0.0 else 0.0)
            fcx, fcy = f_norm * nx, f_norm * ny
            if cp.friction_mu > 0.0:
                vtx, vty = vpx - vn * nx, vpy - vn * ny
                vt = math.hypot(vtx, vty)
                if vt > 1e-12:
                    scale = min(1.0, vt / cp.v_regularization)
                    f_fric = cp.friction_mu * f_norm * scale
                    fcx -= f_fric * vtx / vt
                    fcy -= f_fric * vty / vt
            wrenches[k, 0] += fcx
            wrenches[k, 1] += fcy
            wrenches[k, 2] += rx * fcy - ry * fcx
            pairs.append((k, q))
    return wrenches, pairs


class Simulation:
    """Owns one chain's state and advances it under cable commands.

    Single-threaded by design; independent instances can run in parallel.
    """

    def __init__(self, geometry: RobotGeometry, hydro: HydroParams,
                 contact: ContactParams, lat: Lattice,
                 penalties: PenaltyParams | None = None, dt: float = 1.0e-3):
        if not (0.0 < dt <= DT_MAX):
            raise ValueError(f"dt must be in (0, {DT_MAX}]")
        self.geometry = geometry
        self.hydro = hydro
        self.contact = contact
        self.lattice = lat
        self.penalties = penalties or PenaltyParams()
        self.dt = dt
        g = geometry
        self._i_link = g.link_mass * g.link_length ** 2 / 12.0
        disp = hydro.fluid_density * math.pi * (0.5 * g.link_width) ** 2
        self._m_add = hydro.added_mass_coef_normal * disp * g.link_length
        self._i_add = hydro.added_mass_coef_normal * disp * g.link_length ** 3 / 12.0
        self._posts = np.ascontiguousarray(lat.post_centers, dtype=np.float64)
        self.state: RobotState | None = None
        self.last_max_tension_l = np.zeros(g.joint_count_N)
        self.last_max_tension_r = np.zeros(g.joint_count_N)
        self.last_diag = np.zeros(_core.DIAG_SIZE)

    def reset(self, state: RobotState):
        self.state = state.copy()

    def run_block(self, cmd: CableCommand, n_steps: int) -> int:
        """Advance n_steps of dt under fixed cable commands (in place).

        Records per-joint max cable tensions and diagnostics for the
        block; returns the kernel status (0 = ok).
        """
        st = self.state
        g = self.geometry
        pen = self.penalties
        self.last_max_tension_l[:] = 0.0
        self.last_max_tension_r[:] = 0.0
        diag = self.last_diag
        diag[:] = 0.0
        diag[_core.DIAG_DRAG_POWER_MAX] = -math.inf
        status = _core.run_block(
            st.link_poses, st.link_velocities, n_steps, self.dt,
            g.link_length, g.link_width, g.link_mass, self._i_link,
            self._m_add, self._i_add,
            g.anchor_radius, g.anchor_angle, g.mech_limit,
            pen.k_cable, pen.c_cable, pen.max_tension,
            np.ascontiguousarray(cmd.set_length_left),
            np.ascontiguousarray(cmd.set_length_right),
            pen.k_joint, pen.c_joint, pen.k_limit, pen.c_limit,
            self.hydro.fluid_density, self.hydro.drag_coef_normal_Cn,
            self.hydro.drag_coef_tangential_Ct, self.hydro.rotational_drag_coef,
            self._posts, self.lattice.post_radius,
            self.contact.normal_stiffness, self.contact.normal_damping,
            self.contact.friction_mu, self.contact.v_regularization,
            self.last_max_tension_l, self.last_max_tension_r,
            st.contact_flags, diag)
        st.time += n_steps * self.dt
        if diag[_core.DIAG_DRAG_POWER_MAX] > 1e-9:
            raise SimulationDivergedError(
                f"drag power became positive: {diag[_core.DIAG_DRAG_POWER_MAX]}")
        return int(status)


def step(s: RobotState, cmd: CableCommand, lat: Lattice, g: RobotGeometry,
         h: HydroParams, cp: ContactParams, dt: float,
         penalties: PenaltyParams | None = None) -> RobotState:
    """One semi-implicit Euler step; pure function over RobotState.

    Raises SimulationDivergedError if the state becomes non-finite.
    """
    sim = Simulation(g, h, cp, lat, penalties, dt)
    sim.reset(s)
    status = sim.run_block(cmd, 1)
    if status != _core.STATUS_OK:
        raise SimulationDivergedError("non-finite state after step")
    return sim.state


def net_cycle_displacement(p: GaitParams, h: HydroParams, g: RobotGeometry,
                           cycles: int, dt: float = 1.0e-3,
                           command_dt: float = 1.0e-2) -> np.ndarray:
    """Head displacement after swimming `cycles` full undulation periods.

    Open-water diagnostic: the rigid-tracking gait (G=0) is run from rest
    with the template's initial shape; returns end - start head tip.
    """
    sim = Simulation(g, h, ContactParams(), empty_lattice(), dt=dt)
    state0 = assemble_state((0.0, 0.0), 0.0, suggested_profile(0.0, p), g)
    sim.reset(state0)
    start = sim.state.head_tip(g).copy()
    g_zero = np.zeros(g.joint_count_N)
    substeps = max(1, round(command_dt / dt))
    t_end = cycles / p.temporal_freq_omega
    n_cmd = int(round(t_end / command_dt))
    for k in range(n_cmd):
        cmd = command_profile(suggested_profile(sim.state.time, p), g_zero, p, g)
        if sim.run_block(cmd, substeps) != _core.STATUS_OK:
            raise SimulationDivergedError("open-water run diverged")
    return sim.state.head_tip(g) - start
