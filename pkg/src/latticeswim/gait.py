"""Traveling-wave joint-angle template for lateral undulation.

The template prescribes a sinusoidal "suggested" angle for each joint so
that a bending wave travels from the head-adjacent joint (i=1) toward the
tail (i=N).  All angles are radians; configuration files speak degrees and
convert at the I/O boundary.
"""

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class GaitParams:
    """Undulation template parameters.

    amplitude_A     peak joint angle, rad, in (0, pi/2]
    spatial_freq_xi waves per body length, >= 0
    temporal_freq_omega  undulation frequency, Hz, > 0
    joint_count_N   number of actuated joints, >= 1
    """

    amplitude_A: float
    spatial_freq_xi: float
    temporal_freq_omega: float
    joint_count_N: int

    def __post_init__(self):
        if not (0.0 < self.amplitude_A <= math.pi / 2 + 1e-12):
            raise ValueError(
                f"amplitude_A must be in (0, pi/2] rad, got {self.amplitude_A}")
        if self.spatial_freq_xi < 0.0:
            raise ValueError(f"spatial_freq_xi must be >= 0, got {self.spatial_freq_xi}")
        if self.temporal_freq_omega <= 0.0:
            raise ValueError(
                f"temporal_freq_omega must be > 0, got {self.temporal_freq_omega}")
        if self.joint_count_N < 1:
            raise ValueError(f"joint_count_N must be >= 1, got {self.joint_count_N}")

    @property
    def period(self) -> float:
        """Undulation period in seconds."""
        return 1.0 / self.temporal_freq_omega


def suggested_angle(i: int, t: float, p: GaitParams) -> float:
    """Suggested angle of joint i (1..N) at time t seconds, in radians.

    Phase advances by 2*pi*xi/N per joint, so the wave moves head to tail.
    """
    if not 1 <= i <= p.joint_count_N:
        raise ValueError(f"joint index {i} out of range 1..{p.joint_count_N}")
    phase = TWO_PI * p.spatial_freq_xi * i / p.joint_count_N \
        - TWO_PI * p.temporal_freq_omega * t
    return p.amplitude_A * math.sin(phase)


def suggested_profile(t: float, p: GaitParams) -> np.ndarray:
    """Suggested angles of all N joints at time t, as a float array.

    Element i-1 is exactly suggested_angle(i, t, p).
    """
    return np.array(
        [suggested_angle(i, t, p) for i in range(1, p.joint_count_N + 1)],
        dtype=np.float64)
