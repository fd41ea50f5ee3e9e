"""Run configuration files: strict JSON with unit-suffixed keys.

Angles in config files are degrees (keys carry _deg); everything becomes
radians/SI at this boundary.  Unknown keys are rejected so sweep typos
fail loudly instead of silently running defaults.
"""

import json
import math
from dataclasses import replace

from .cables import RobotGeometry
from .controller import ControllerParams
from .dynamics import ContactParams, HydroParams, PenaltyParams
from .experiments import TrialConfig
from .gait import GaitParams
from .lattice import (Lattice, build_perturbed_lattice, build_regular_lattice,
                      empty_lattice, load_lattice)


class ConfigError(ValueError):
    pass


DEFAULT_CONFIG = {
    "gait": {"A_deg": 55.0, "xi": 0.6, "omega_hz": 0.05, "N": 5},
    "compliance": {
        "mode": "fixed",
        "G": 1.0,
        "controller": {
            "T_Nm": 1.4,
            "thresholds": [0.3, 0.5, 0.7],
            "increment": 0.2,
            "hold_s": 0.5,
        },
    },
    "robot": {
        "link_length_m": 0.11,
        "link_width_m": 0.05,
        "total_length_m": 0.66,
        "total_mass_kg": 1.0,
        "Lc_m": 0.021,
        "Lj_m": 0.025,
        "l0_m_per_deg": 0.00073,
        "pulley_radius_m": 0.010,
        "mech_limit_deg": 80.0,
    },
    "hydro": {
        "rho_kg_per_m3": 1000.0,
        "Cn": 2.0,
        "Ct": 0.2,
        "C_rot": 2.0,
        "added_mass_coef": 1.0,
    },
    "contact": {
        "k_N_per_m": 1.0e4,
        "c_Ns_per_m": 50.0,
        "mu": 0.1,
    },
    "lattice": {
        "mode": "regular",       # regular | perturbed | file | none
        "spacing_m": 0.25,
        "radius_m": 0.045,
        "bounds_m": 2.0,
        "sigma_m": 0.05,
        "seed": 0,
        "file": "",
    },
    "trial": {
        "seed": 0,
        "max_duration_s": 600.0,
        "jam_window_periods": 3.0,
        "jam_eps_m": 0.02,
    },
}


def _merge_strict(defaults: dict, user: dict, path: str = "") -> dict:
    out = {}
    for key, dval in defaults.items():
        here = f"{path}.{key}" if path else key
        if key in user:
            uval = user[key]
            if isinstance(dval, dict):
                if not isinstance(uval, dict):
                    raise ConfigError(f"config key '{here}' must be a section")
                out[key] = _merge_strict(dval, uval, here)
            else:
                out[key] = uval
        else:
            out[key] = dval
    for key in user:
        if key not in defaults:
            here = f"{path}.{key}" if path else key
            raise ConfigError(f"unknown config key '{here}'")
    return out


def _number(cfg: dict, section: str, key: str) -> float:
    v = cfg[section][key] if section else cfg[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"config key '{section}.{key}' must be a number, got {v!r}")
    return float(v)


def load_config_dict(raw: dict) -> dict:
    """Merge a raw dict over the defaults, rejecting unknown keys."""
    return _merge_strict(DEFAULT_CONFIG, raw)


def load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return load_config_dict(raw)


def build_trial_config(cfg: dict) -> TrialConfig:
    """Validate a merged config dict and construct the TrialConfig."""
    try:
        gait = GaitParams(
            amplitude_A=math.radians(_number(cfg, "gait", "A_deg")),
            spatial_freq_xi=_number(cfg, "gait", "xi"),
            temporal_freq_omega=_number(cfg, "gait", "omega_hz"),
            joint_count_N=int(cfg["gait"]["N"]),
        )
    except ValueError as exc:
        raise ConfigError(f"gait: {exc}") from exc

    r = cfg["robot"]
    n_joints = gait.joint_count_N
    try:
        geometry = RobotGeometry(
            joint_count_N=n_joints,
            link_length=_number(cfg, "robot", "link_length_m"),
            cable_offset_Lc=_number(cfg, "robot", "Lc_m"),
            anchor_half_span_Lj=_number(cfg, "robot", "Lj_m"),
            relaxed_rate_l0=_number(cfg, "robot", "l0_m_per_deg"),
            pulley_radius=_number(cfg, "robot", "pulley_radius_m"),
            mech_limit=math.radians(_number(cfg, "robot", "mech_limit_deg")),
            link_mass=_number(cfg, "robot", "total_mass_kg") / (n_joints + 1),
            link_width=_number(cfg, "robot", "link_width_m"),
            total_length=_number(cfg, "robot", "total_length_m"),
        )
    except ValueError as exc:
        raise ConfigError(f"robot: {exc}") from exc
    if gait.amplitude_A > geometry.mech_limit + 1e-12:
        raise ConfigError("gait.A_deg exceeds robot.mech_limit_deg")

    try:
        hydro = HydroParams(
            fluid_density=_number(cfg, "hydro", "rho_kg_per_m3"),
            drag_coef_normal_Cn=_number(cfg, "hydro", "Cn"),
            drag_coef_tangential_Ct=_number(cfg, "hydro", "Ct"),
            rotational_drag_coef=_number(cfg, "hydro", "C_rot"),
            added_mass_coef_normal=_number(cfg, "hydro", "added_mass_coef"),
        )
    except ValueError as exc:
        raise ConfigError(f"hydro.Cn/hydro.Ct: {exc}") from exc

    try:
        contact = ContactParams(
            normal_stiffness=_number(cfg, "contact", "k_N_per_m"),
            normal_damping=_number(cfg, "contact", "c_Ns_per_m"),
            friction_mu=_number(cfg, "contact", "mu"),
        )
    except ValueError as exc:
        raise ConfigError(f"contact: {exc}") from exc

    lat_cfg = cfg["lattice"]
    half = 0.5 * _number(cfg, "lattice", "bounds_m")
    bounds = (-half, -half, half, half)
    mode = lat_cfg["mode"]
    try:
        if mode == "regular":
            lat = build_regular_lattice(lat_cfg["spacing_m"], lat_cfg["radius_m"],
                                        bounds)
        elif mode == "perturbed":
            base = build_regular_lattice(lat_cfg["spacing_m"], lat_cfg["radius_m"],
                                         bounds)
            lat = build_perturbed_lattice(base, lat_cfg["sigma_m"],
                                          int(lat_cfg["seed"]))
        elif mode == "file":
            if not lat_cfg["file"]:
                raise ConfigError("lattice.mode=file requires lattice.file")
            lat = load_lattice(lat_cfg["file"], bounds)
        elif mode == "none":
            lat = empty_lattice(bounds, lat_cfg["radius_m"], lat_cfg["spacing_m"])
        else:
            raise ConfigError(f"lattice.mode must be regular|perturbed|file|none, "
                              f"got {mode!r}")
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"lattice: {exc}") from exc

    comp = cfg["compliance"]
    if comp["mode"] not in ("fixed", "controller"):
        raise ConfigError(
            f"compliance.mode must be 'fixed' or 'controller', got {comp['mode']!r}")
    ctl = comp["controller"]
    try:
        controller = ControllerParams(
            stall_torque_T=_number(cfg["compliance"], "controller", "T_Nm"),
            thresholds=tuple(float(x) for x in ctl["thresholds"]),
            increment=float(ctl["increment"]),
            hold_duration=float(ctl["hold_s"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"compliance.controller: {exc}") from exc

    trial = cfg["trial"]
    jam_window = float(trial["jam_window_periods"]) / gait.temporal_freq_omega
    try:
        return TrialConfig(
            gait=gait, geometry=geometry, hydro=hydro, contact=contact,
            lattice=lat, compliance_mode=comp["mode"], G=float(comp["G"]),
            controller=controller, seed=int(trial["seed"]),
            max_duration=float(trial["max_duration_s"]),
            jam_window=jam_window,
            jam_displacement_eps=float(trial["jam_eps_m"]),
        )
    except ValueError as exc:
        raise ConfigError(f"trial: {exc}") from exc
