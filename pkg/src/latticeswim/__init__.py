"""latticeswim: deterministic 2D simulator of a cable-driven undulatory
surface swimmer navigating obstacle lattices, with an experiment harness."""

from .cables import (CableCommand, ComplianceState, InfeasibleCommandError,
                     RobotGeometry, cable_command, cable_length_derivatives,
                     exact_cable_lengths, joint_constraint, permitted_interval)
from .controller import (ControllerParams, ControllerState,
                         estimate_motor_torque, target_G)
from .dynamics import (ContactParams, HydroParams, PenaltyParams, RobotState,
                       SimulationDivergedError, Simulation, assemble_state,
                       contact_forces, drag_wrench, net_cycle_displacement, step)
from .experiments import (Outcome, StartPoseError, TrialConfig, TrialResult,
                          run_sweep, run_trial, speed_stats, success_rate,
                          survival_function)
from .gait import GaitParams, suggested_angle, suggested_profile
from .lattice import (Lattice, LatticeError, build_perturbed_lattice,
                      build_regular_lattice, empty_lattice, load_lattice,
                      query_clearance, save_lattice)

__version__ = "0.1.0"
