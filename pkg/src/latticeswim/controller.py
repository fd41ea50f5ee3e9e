"""Decentralized compliance tuning from per-joint motor-torque estimates.

Each joint independently maps its estimated motor torque onto a target
compliance level through three inclusive torque thresholds (fractions of
the motor stall torque); crossing a threshold raises the joint's G by a
fixed increment.  Raised values are held for a minimum dwell time before
they may step back down.
"""

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ControllerParams:
    """Thresholding parameters; defaults follow the hardware servo."""

    stall_torque_T: float = 1.4           # N*m
    thresholds: tuple[float, ...] = (0.3, 0.5, 0.7)  # fractions of T
    increment: float = 0.2                # G step per threshold crossed
    hold_duration: float = 0.5            # s, minimum dwell after an increase
    base_G: float = 1.0
    drop_during_hold: bool = False        # if True, torque drop ends the hold early

    def __post_init__(self):
        if self.stall_torque_T <= 0:
            raise ValueError("stall_torque_T must be positive")
        if self.hold_duration < 0:
            raise ValueError("hold_duration must be >= 0")

    @property
    def levels(self) -> tuple[float, ...]:
        """Reachable G values, base through base + increment*len(thresholds)."""
        return tuple(self.base_G + self.increment * k
                     for k in range(len(self.thresholds) + 1))


def target_G(tau: float, T: float, thresholds=(0.3, 0.5, 0.7),
             increment: float = 0.2, base: float = 1.0) -> float:
    """Stateless torque-to-compliance map with inclusive step boundaries."""
    if not math.isfinite(tau) or tau < 0.0:
        raise ValueError(f"torque magnitude expected, got {tau}")
    if T <= 0.0:
        raise ValueError("stall torque T must be positive")
    g = base
    for frac in thresholds:
        if tau - frac * T >= 0.0:
            g += increment
    return g


def estimate_motor_torque(tension_left: float, tension_right: float,
                          pulley_radius: float) -> float:
    """Torque seen by the more loaded of the two cable motors (N*m)."""
    if tension_left < 0.0 or tension_right < 0.0:
        raise ValueError("tensions must be >= 0")
    return max(tension_left, tension_right) * pulley_radius


@dataclass
class ControllerState:
    """Per-joint compliance levels and hold timers."""

    params: ControllerParams
    current_G: np.ndarray
    hold_timer: np.ndarray

    @classmethod
    def initial(cls, joint_count: int,
                params: ControllerParams | None = None) -> "ControllerState":
        p = params or ControllerParams()
        return cls(p, np.full(joint_count, p.base_G, dtype=np.float64),
                   np.zeros(joint_count, dtype=np.float64))

    def update(self, tau: np.ndarray, dt: float) -> np.ndarray:
        """Advance one controller tick; returns the per-joint G output.

        Joints are independent: a rising target is adopted immediately
        and resets that joint's hold timer; a falling target is adopted
        only once the timer has expired (or, with drop_during_hold,
        immediately).  Timers are decremented by dt first, so a value
        adopted at tick k survives through tick k + hold/dt.
        """
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        p = self.params
        tau = np.asarray(tau, dtype=np.float64)
        for k in range(len(self.current_G)):
            self.hold_timer[k] = max(0.0, self.hold_timer[k] - dt)
            cand = target_G(float(tau[k]), p.stall_torque_T, p.thresholds,
                            p.increment, p.base_G)
            if cand > self.current_G[k]:
                self.current_G[k] = cand
                self.hold_timer[k] = p.hold_duration
            elif cand < self.current_G[k]:
                if self.hold_timer[k] <= 0.0 or p.drop_during_hold:
                    self.current_G[k] = cand
        return self.current_G.copy()
