"""Sine-shaped feed transitions, the comparison baseline.

The velocity rises along half a sine wave, which zeroes the boundary
accelerations but leaves the jerk discontinuous at block ends. Its peak
acceleration and jerk have exact closed forms, so the same scheduling
machinery applies with the two sine reduction constants in place of the
shaped-kernel ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .chordscan import FeedrateScatter, Limits
from .geometry import ParametricCurve
from .optimizer import MuSet, schedule
from .segmentation import Block
from .sprofile import ProfileDomainError, ProfileError, block_duration

__all__ = [
    "SineProfile",
    "build_sine_profile",
    "sine_velocity_at",
    "sine_acceleration_at",
    "sine_jerk_at",
    "sine_displacement_at",
    "sine_peaks",
    "sine_mus",
    "sine_schedule",
]


@dataclass(frozen=True)
class SineProfile:
    """Half-sine feed transition from v_s to v_e over duration T."""

    v_s: float
    v_e: float
    T: float

    def __post_init__(self):
        if self.v_s < 0.0 or self.v_e < 0.0:
            raise ProfileError("feeds must be non-negative")
        if self.v_s != self.v_e and self.T <= 0.0:
            raise ProfileError("a feed change needs positive duration")
        if self.T < 0.0:
            raise ProfileError("duration must be non-negative")


def build_sine_profile(block: Block) -> SineProfile:
    return SineProfile(
        v_s=block.v_s,
        v_e=block.v_e,
        T=block_duration(block.L, block.v_s, block.v_e),
    )


def _clamp_time(profile: SineProfile, t: float) -> float:
    grace = 1e-9 * (1.0 + profile.T)
    if t < -grace or t > profile.T + grace:
        raise ProfileDomainError(
            f"t={t!r} outside [0, {profile.T!r}]"
        )
    return min(max(t, 0.0), profile.T)


def _phase(profile: SineProfile, t: float) -> float:
    return math.pi * (t / profile.T - 0.5)


def sine_velocity_at(profile: SineProfile, t: float) -> float:
    t = _clamp_time(profile, t)
    if profile.v_s == profile.v_e:
        return profile.v_s
    half = 0.5 * (profile.v_e - profile.v_s)
    return half * (math.sin(_phase(profile, t)) + 1.0) + profile.v_s


def sine_acceleration_at(profile: SineProfile, t: float) -> float:
    t = _clamp_time(profile, t)
    if profile.v_s == profile.v_e:
        return 0.0
    dv = profile.v_e - profile.v_s
    return dv * math.pi / (2.0 * profile.T) * math.cos(_phase(profile, t))


def sine_jerk_at(profile: SineProfile, t: float) -> float:
    t = _clamp_time(profile, t)
    if profile.v_s == profile.v_e:
        return 0.0
    dv = profile.v_e - profile.v_s
    return -dv * (math.pi / profile.T) ** 2 / 2.0 * math.sin(_phase(profile, t))


def sine_displacement_at(profile: SineProfile, t: float) -> float:
    """Travel (mm) from the block start to block-local time t, exactly."""
    t = _clamp_time(profile, t)
    if profile.v_s == profile.v_e:
        return profile.v_s * t
    half = 0.5 * (profile.v_e - profile.v_s)
    T = profile.T
    return (profile.v_s + half) * t - half * T / math.pi * math.sin(
        math.pi * t / T
    )


def sine_peaks(v_s: float, v_e: float, L: float) -> tuple[float, float]:
    """Exact peak |accel| and |jerk| of the sine transition over L."""
    if v_s == v_e or L <= 0.0:
        return 0.0, 0.0
    T = 2.0 * L / (v_s + v_e)
    dv = abs(v_e - v_s)
    return dv * math.pi / (2.0 * T), dv * math.pi * math.pi / (2.0 * T * T)


def sine_mus() -> tuple[float, float]:
    """The sine profile's two constraint-reduction constants."""
    return math.pi / 4.0, math.pi * math.pi / 8.0


def _sine_mu_set() -> MuSet:
    mu6, mu7 = sine_mus()
    # only the two maxima drive the solvers; the kernel intermediates
    # have no sine counterpart and stay zero
    return MuSet(
        mu1=mu6, mu2=0.0, mu3=mu7, mu4=0.0, mu5=0.0,
        mu_n=mu6, mu_m=mu7, q=0.0, p_aux=0.0, lambda1=0.0, lambda2=0.0,
    )


def sine_schedule(
    curve: ParametricCurve,
    blocks: list[Block],
    scatter: FeedrateScatter,
    limits: Limits,
    max_sweeps: int = 1000,
) -> list[Block]:
    """Run the block scheduler with sine constants and sine peaks."""
    return schedule(
        curve,
        blocks,
        scatter,
        limits,
        mus=_sine_mu_set(),
        peaks_fn=lambda v_s, v_e, L: sine_peaks(v_s, v_e, L),
        max_sweeps=max_sweeps,
    )
