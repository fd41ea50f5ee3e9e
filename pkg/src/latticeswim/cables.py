"""Bilateral cable kinematics and the compliance cable-length policy.

Each bending joint is driven by a left and a right cable anchored a
longitudinal distance Lj from the pivot on both neighboring links, offset
laterally by Lc.  The exact (taut) cable lengths for a joint angle alpha
are

    len_left(alpha)  = 2*sqrt(Lc^2+Lj^2) * cos(-alpha/2 + atan(Lc/Lj))
    len_right(alpha) = 2*sqrt(Lc^2+Lj^2) * cos(+alpha/2 + atan(Lc/Lj))

so positive alpha shortens the right cable and lengthens the left one (up
to the geometric maximum at alpha = 2*atan(Lc/Lj)).

Body compliance is programmed per joint by a scalar G >= 0: the commanded
set lengths follow the exact lengths on one side of a switch angle
gamma = (2G-1)*A and add slack at the fixed relaxed rate l0 (meters per
DEGREE) beyond it.  G=0 pins the joint to the suggested angle, G=0.5 lets
it open further than suggested, G=1 lets it deviate both ways, and large G
leaves both cables permanently slack (fully passive).

Cables are inextensible in hardware; here tautness is realized as a stiff
one-sided penalty spring, which also yields the tension signal used by the
compliance-tuning controller.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .gait import GaitParams


class InfeasibleCommandError(ValueError):
    """Commanded cable lengths admit no joint angle at all."""


@dataclass(frozen=True)
class RobotGeometry:
    """Link/cable geometry and joint mechanical parameters (SI units).

    relaxed_rate_l0 is in meters per DEGREE of slack angle, matching how
    cable slack is specified for the hardware.
    """

    joint_count_N: int = 5
    link_length: float = 0.11
    cable_offset_Lc: float = 0.021
    anchor_half_span_Lj: float = 0.025
    relaxed_rate_l0: float = 0.00073
    pulley_radius: float = 0.010
    mech_limit: float = math.radians(80.0)
    link_mass: float = 1.0 / 6.0
    link_width: float = 0.05
    total_length: float = 0.66

    def __post_init__(self):
        if self.cable_offset_Lc <= 0 or self.anchor_half_span_Lj <= 0:
            raise ValueError("cable anchor offsets Lc, Lj must be positive")
        if self.relaxed_rate_l0 <= 0:
            raise ValueError("relaxed_rate_l0 must be positive")
        if not (0.0 < self.mech_limit <= math.pi / 2 + 1e-12):
            raise ValueError("mech_limit must be in (0, 90 deg]")
        if self.joint_count_N < 1:
            raise ValueError("joint_count_N must be >= 1")
        if self.link_mass <= 0 or self.link_width <= 0 or self.link_length <= 0:
            raise ValueError("link dimensions and mass must be positive")
        expect = (self.joint_count_N + 1) * self.link_length
        if abs(self.total_length - expect) > 0.01 * expect:
            raise ValueError(
                f"total_length {self.total_length} inconsistent with "
                f"{self.joint_count_N + 1} links x {self.link_length} m (within 1%)")

    @property
    def n_links(self) -> int:
        return self.joint_count_N + 1

    @property
    def anchor_radius(self) -> float:
        """Distance from pivot to a cable anchor, sqrt(Lc^2 + Lj^2)."""
        return math.hypot(self.cable_offset_Lc, self.anchor_half_span_Lj)

    @property
    def anchor_angle(self) -> float:
        """atan(Lc/Lj), the anchor's angular offset from the link axis."""
        return math.atan2(self.cable_offset_Lc, self.anchor_half_span_Lj)


@dataclass(frozen=True)
class ComplianceState:
    """Per-joint generalized compliance values G_i in [0, G_max]."""

    G_per_joint: np.ndarray
    G_max: float = 1.75

    def __post_init__(self):
        g = np.asarray(self.G_per_joint, dtype=np.float64)
        object.__setattr__(self, "G_per_joint", g)
        if np.any(g < 0.0) or np.any(g > self.G_max + 1e-12):
            raise ValueError(f"G values must lie in [0, {self.G_max}]")


@dataclass(frozen=True)
class CableCommand:
    """Commanded set lengths (m) of the left and right cable of each joint."""

    set_length_left: np.ndarray
    set_length_right: np.ndarray

    def __post_init__(self):
        l = np.asarray(self.set_length_left, dtype=np.float64)
        r = np.asarray(self.set_length_right, dtype=np.float64)
        if l.shape != r.shape:
            raise ValueError("left/right command arrays must have equal shape")
        object.__setattr__(self, "set_length_left", l)
        object.__setattr__(self, "set_length_right", r)

    def validate(self, g: RobotGeometry):
        """Reject commands shorter than any geometrically reachable length."""
        lo_l, _ = exact_cable_lengths(-g.mech_limit, g)
        _, lo_r = exact_cable_lengths(g.mech_limit, g)
        if np.any(self.set_length_left < lo_l - 1e-12) or \
                np.any(self.set_length_right < lo_r - 1e-12):
            raise ValueError("cable command shorter than geometrically attainable")


def exact_cable_lengths(alpha: float, g: RobotGeometry) -> tuple[float, float]:
    """Taut left/right cable lengths (m) at joint angle alpha (rad)."""
    if not math.isfinite(alpha):
        raise ValueError("joint angle must be finite")
    if abs(alpha) > g.mech_limit + 1e-12:
        raise ValueError(
            f"joint angle {alpha} beyond mechanical limit {g.mech_limit}")
    two_r = 2.0 * g.anchor_radius
    phi = g.anchor_angle
    return (two_r * math.cos(-0.5 * alpha + phi),
            two_r * math.cos(0.5 * alpha + phi))


def cable_length_derivatives(alpha: float, g: RobotGeometry) -> tuple[float, float]:
    """d(length)/d(alpha) (m/rad) of the left and right cable."""
    r = g.anchor_radius
    phi = g.anchor_angle
    return (r * math.sin(phi - 0.5 * alpha),
            -r * math.sin(phi + 0.5 * alpha))


def cable_command(alpha_suggested: float, G: float, p: GaitParams,
                  g: RobotGeometry) -> tuple[float, float]:
    """Commanded set lengths of one joint's cable pair.

    Follows the piecewise policy: the cable on the side the suggested angle
    is moving into stays exact while the other side is relaxed by
    l0 * (gamma +/- alpha) degrees of slack, with gamma = (2G-1)*A.
    Continuous in alpha_suggested for G <= 1; for G > 1 the exact branch is
    never reached on |alpha| <= A.
    """
    A = p.amplitude_A
    gamma = (2.0 * G - 1.0) * A
    m = min(A, gamma)
    if alpha_suggested <= -gamma:
        left = exact_cable_lengths(alpha_suggested, g)[0]
    else:
        left = exact_cable_lengths(-m, g)[0] \
            + g.relaxed_rate_l0 * math.degrees(gamma + alpha_suggested)
    if alpha_suggested >= gamma:
        right = exact_cable_lengths(alpha_suggested, g)[1]
    else:
        right = exact_cable_lengths(m, g)[1] \
            + g.relaxed_rate_l0 * math.degrees(gamma - alpha_suggested)
    return left, right


def command_profile(alpha_profile: np.ndarray, G_per_joint: np.ndarray,
                    p: GaitParams, g: RobotGeometry) -> CableCommand:
    """Cable commands for all joints from a suggested-angle profile."""
    n = len(alpha_profile)
    left = np.empty(n)
    right = np.empty(n)
    for k in range(n):
        left[k], right[k] = cable_command(float(alpha_profile[k]),
                                          float(G_per_joint[k]), p, g)
    return CableCommand(left, right)


def _bisect_length(target: float, a: float, b: float, side: int,
                   g: RobotGeometry, tol: float) -> float:
    """Root of exact length - target on [a, b] where the length is monotone."""
    fa = exact_cable_lengths(a, g)[side] - target
    for _ in range(200):
        mid = 0.5 * (a + b)
        fm = exact_cable_lengths(mid, g)[side] - target
        if (fa <= 0.0) == (fm <= 0.0):
            a, fa = mid, fm
        else:
            b = mid
        if b - a <= tol:
            break
    return 0.5 * (a + b)


def _infeasible_band(set_length: float, side: int, g: RobotGeometry,
                     tol: float) -> tuple[float, float] | None:
    """Angle band where one cable would need to be longer than commanded.

    Each cable's exact length is unimodal in alpha with its maximum 2*R at
    alpha = +/- 2*atan(Lc/Lj); the violating set, if any, is a single band
    around that peak.
    """
    lim = g.mech_limit
    peak = 2.0 * g.anchor_angle if side == 0 else -2.0 * g.anchor_angle
    peak = max(-lim, min(lim, peak))
    if exact_cable_lengths(peak, g)[side] <= set_length:
        return None
    if exact_cable_lengths(-lim, g)[side] > set_length:
        lo = -lim
    else:
        lo = _bisect_length(set_length, -lim, peak, side, g, tol)
    if exact_cable_lengths(lim, g)[side] > set_length:
        hi = lim
    else:
        hi = _bisect_length(set_length, peak, lim, side, g, tol)
    return lo, hi


def permitted_interval(set_length_left: float, set_length_right: float,
                       g: RobotGeometry, anchor_alpha: float = 0.0,
                       tol: float = 1e-9) -> tuple[float, float]:
    """Maximal angle interval reachable under the commanded cable lengths.

    The feasible set {alpha : len_left(alpha) <= set_left and
    len_right(alpha) <= set_right} within [-mech_limit, mech_limit] can
    have spurious components past the cable-length maxima; the component
    on the operating branch (containing, or nearest to, anchor_alpha) is
    returned.  Raises InfeasibleCommandError when the set is empty.
    """
    lim = g.mech_limit
    bands = []
    for side, target in ((0, set_length_left), (1, set_length_right)):
        band = _infeasible_band(target, side, g, tol)
        if band is not None:
            bands.append(band)

    # Subtract the violating bands from the full range.
    comps = [(-lim, lim)]
    for blo, bhi in bands:
        nxt = []
        for clo, chi in comps:
            lo, hi = max(clo, blo), min(chi, bhi)
            if lo >= hi:  # no overlap
                nxt.append((clo, chi))
                continue
            if clo < lo:
                nxt.append((clo, lo))
            if hi < chi:
                nxt.append((hi, chi))
        comps = nxt
    comps = [c for c in comps if c[1] - c[0] >= 0.0]
    if not comps:
        raise InfeasibleCommandError(
            "cable command admits no joint angle (over-tight)")

    for clo, chi in comps:
        if clo - tol <= anchor_alpha <= chi + tol:
            return clo, chi
    # Anchor is infeasible (possible for exotic geometries); take the
    # nearest component.
    best = min(comps, key=lambda c: min(abs(anchor_alpha - c[0]),
                                        abs(anchor_alpha - c[1])))
    return best


def joint_constraint(alpha: float, alpha_rate: float,
                     set_length_left: float, set_length_right: float,
                     g: RobotGeometry, k_cable: float = 2.0e4,
                     c_cable: float = 50.0) -> tuple[float, float, float]:
    """Penalty torque and cable tensions at one joint.

    A cable is taut when its exact length exceeds the commanded set
    length; tension is the one-sided spring force plus damping on the
    lengthening rate, and the joint torque is -sum(tension * dlen/dalpha),
    which always restores alpha toward the permitted interval.
    Returns (joint_torque, tension_left, tension_right).
    """
    if not (math.isfinite(alpha) and math.isfinite(alpha_rate)
            and math.isfinite(set_length_left) and math.isfinite(set_length_right)):
        raise ValueError("non-finite joint state or command")
    len_l, len_r = exact_cable_lengths(alpha, g)
    dlen_l, dlen_r = cable_length_derivatives(alpha, g)
    torque = 0.0
    tension_l = 0.0
    tension_r = 0.0
    excess_l = len_l - set_length_left
    if excess_l > 0.0:
        tension_l = k_cable * excess_l + c_cable * max(0.0, dlen_l * alpha_rate)
        torque -= tension_l * dlen_l
    excess_r = len_r - set_length_right
    if excess_r > 0.0:
        tension_r = k_cable * excess_r + c_cable * max(0.0, dlen_r * alpha_rate)
        torque -= tension_r * dlen_r
    return torque, tension_l, tension_r
