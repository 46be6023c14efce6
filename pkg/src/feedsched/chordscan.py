"""Chord-error-limited feed rate scanning along a parametric path.

Walks the curve in controller-period steps, predicting the next parameter
with a second-order expansion and shrinking the commanded feed until the
chord deviation of each step fits the programmed tolerance. The result is
a scatter of per-parameter feed ceilings used by the downstream scheduler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .geometry import (
    ParametricCurve,
    SingularCurveError,
    curvature_radius,
    derivatives,
    evaluate,
)

__all__ = [
    "ChordScanError",
    "StepDegeneracyError",
    "ScanConvergenceError",
    "MalformedScatterError",
    "Limits",
    "FeedrateScatter",
    "taylor_step",
    "chord_error",
    "limit_feedrate",
    "scan_curve",
]

_MAX_FEED_ITERATIONS = 64
_BRACKET_REFINE_ITERATIONS = 24
_FEED_BACKOFF_CAP = 0.95
_FALLBACK_SAMPLES = 33
_MAX_SCAN_POINTS = 5_000_000
# A dip only gets midpoint probes when a neighbour sits at least this
# far above it; flatter wells are already sampled finely enough.
_WELL_REL_DEPTH = 0.01


class ChordScanError(ValueError):
    """Base class for scan failures."""


class StepDegeneracyError(ChordScanError):
    """The second-order parameter step ran backwards (feed too large)."""


class ScanConvergenceError(ChordScanError):
    """Feed adjustment failed to settle within the iteration budget."""


class MalformedScatterError(ChordScanError):
    """Scatter points violate ordering or range requirements."""


@dataclass(frozen=True)
class Limits:
    """Machine and tolerance settings, all strictly positive.

    Ts is the controller period in seconds, delta_max the chord tolerance
    in mm, v_max/a_max/j_max the feed (mm/s), acceleration (mm/s^2) and
    jerk (mm/s^3) ceilings, shape_s the steepness of the S-shaped profile.
    mu_s, when given, overrides the automatic breakpoint screening
    threshold (mm/s per unit parameter).
    """

    Ts: float
    delta_max: float
    v_max: float
    a_max: float
    j_max: float
    shape_s: float
    mu_s: float | None = None

    def __post_init__(self):
        for name in ("Ts", "delta_max", "v_max", "a_max", "j_max", "shape_s"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if self.mu_s is not None and not self.mu_s > 0.0:
            raise ValueError("mu_s must be strictly positive when given")


class FeedrateScatter:
    """Ordered (u, v) samples of the chord-error feed ceiling."""

    __slots__ = ("u", "v", "__dict__")

    def __init__(self, u, v):
        u_arr = np.asarray(u, dtype=float)
        v_arr = np.asarray(v, dtype=float)
        if u_arr.ndim != 1 or u_arr.shape != v_arr.shape or u_arr.size < 2:
            raise MalformedScatterError("need matching 1-D u and v arrays")
        if np.any(np.diff(u_arr) <= 0.0):
            raise MalformedScatterError("u must be strictly increasing")
        if u_arr[0] != 0.0 or u_arr[-1] != 1.0:
            raise MalformedScatterError("scatter must span u = 0 to u = 1")
        if np.any(v_arr <= 0.0):
            raise MalformedScatterError("feed values must be positive")
        u_arr.setflags(write=False)
        v_arr.setflags(write=False)
        self.u = u_arr
        self.v = v_arr

    def __len__(self) -> int:
        return int(self.u.size)

    @property
    def points(self) -> list[tuple[float, float]]:
        return [(float(a), float(b)) for a, b in zip(self.u, self.v)]

    def value_at(self, u: float) -> float:
        return float(np.interp(u, self.u, self.v))

    def min_between(self, u_a: float, u_b: float) -> float:
        """Smallest ceiling over [u_a, u_b], including interpolated ends."""
        if u_b < u_a:
            u_a, u_b = u_b, u_a
        lo = int(np.searchsorted(self.u, u_a, side="left"))
        hi = int(np.searchsorted(self.u, u_b, side="right"))
        best = min(self.value_at(u_a), self.value_at(u_b))
        if hi > lo:
            best = min(best, float(self.v[lo:hi].min()))
        return best


def taylor_step(curve: ParametricCurve, u: float, v: float, Ts: float) -> float:
    """Parameter reached after one period at feed v, second-order accurate.

    Clamps at the curve end. Raises StepDegeneracyError if the curvature
    correction overwhelms the first-order advance, which signals a feed
    far too large for the local geometry.
    """
    if v < 0.0:
        raise ChordScanError("feed must be non-negative")
    if v == 0.0:
        return u
    d1, d2 = derivatives(curve, u, 2)
    speed_sq = sum(c * c for c in d1)
    if speed_sq <= 0.0:
        raise SingularCurveError(f"vanishing first derivative at u={u}")
    speed = math.sqrt(speed_sq)
    dot = sum(a * b for a, b in zip(d1, d2))
    first = v * Ts / speed
    second = dot / (2.0 * speed_sq * speed_sq) * v * v * Ts * Ts
    u_next = u + first - second
    if u_next < u:
        raise StepDegeneracyError(
            f"parameter step reversed at u={u:.6f} for v={v:.3f}"
        )
    return min(u_next, 1.0)


def _max_chord_deviation(curve, u_a, u_b, p_a, p_b) -> float:
    ax, ay = p_a[0], p_a[1]
    bx, by = p_b[0], p_b[1]
    az = p_a[2] if len(p_a) == 3 else 0.0
    bz = p_b[2] if len(p_b) == 3 else 0.0
    dx, dy, dz = bx - ax, by - ay, bz - az
    seg_sq = dx * dx + dy * dy + dz * dz
    worst = 0.0
    for u in np.linspace(u_a, u_b, _FALLBACK_SAMPLES):
        p = evaluate(curve, float(u))
        px, py = p[0] - ax, p[1] - ay
        pz = (p[2] if len(p) == 3 else 0.0) - az
        t = (px * dx + py * dy + pz * dz) / seg_sq
        t = min(1.0, max(0.0, t))
        ex, ey, ez = px - t * dx, py - t * dy, pz - t * dz
        worst = max(worst, math.sqrt(ex * ex + ey * ey + ez * ez))
    return worst


def chord_error(curve: ParametricCurve, u_a: float, u_b: float) -> float:
    """Deviation of the chord between two parameters from the curve (mm).

    Uses the circular-arc model with the osculating radius at the midpoint
    parameter; straight spans report zero. When the chord is too long for
    the arc model the deviation is sampled directly.
    """
    if u_b < u_a:
        raise ChordScanError(f"u_b={u_b} precedes u_a={u_a}")
    p_a = evaluate(curve, u_a)
    p_b = evaluate(curve, u_b)
    chord = math.dist(p_a, p_b)
    if chord == 0.0:
        return 0.0
    rho = curvature_radius(curve, 0.5 * (u_a + u_b))
    if math.isinf(rho):
        return 0.0
    if 2.0 * rho > chord:
        return rho - math.sqrt(rho * rho - 0.25 * chord * chord)
    return _max_chord_deviation(curve, u_a, u_b, p_a, p_b)


def _settle_landing(curve, u, u_pred, target):
    """Polish a predicted landing until its chord matches the advance.

    The truncated prediction can land a few percent short of the chord
    the interpolator will actually traverse at this feed, which would
    certify an optimistically short step. A couple of Newton corrections
    close that gap; the curve end clamps the landing as usual.
    """
    p0 = evaluate(curve, u)
    x = u_pred
    for _ in range(3):
        gap = target - math.dist(evaluate(curve, x), p0)
        if abs(gap) <= 1e-4 * target:
            break
        d1 = derivatives(curve, x, 1)[0]
        speed = math.sqrt(sum(c * c for c in d1))
        if speed <= 0.0:
            break
        floor = u + 0.25 * (u_pred - u)
        x = min(max(x + gap / speed, floor), 1.0)
        if x >= 1.0:
            break
    return x


def _probe_step(
    curve: ParametricCurve, u: float, v: float, limits: Limits
) -> tuple[float, float]:
    """One-period chord deviation at feed v; inf marks an unusable step."""
    try:
        u_next = taylor_step(curve, u, v, limits.Ts)
    except StepDegeneracyError:
        return math.inf, u
    if u_next <= u:
        return math.inf, u
    u_next = _settle_landing(curve, u, u_next, v * limits.Ts)
    return chord_error(curve, u, u_next), u_next


def limit_feedrate(
    curve: ParametricCurve, u: float, limits: Limits
) -> tuple[float, float]:
    """Largest chord-safe feed at u, plus the parameter it advances to.

    Starts each probe from the programmed ceiling and rescales the
    candidate by sqrt(tolerance / measured deviation) until the step's
    chord error fits, forcing geometric backoff when the rescale stalls
    near the tolerance boundary. The first safe feed then brackets a
    bisection against the tightest unsafe one, so curvature spikes do
    not cost more feed than the tolerance demands.
    """
    v = limits.v_max
    unsafe = None
    safe = None
    for _ in range(_MAX_FEED_ITERATIONS):
        delta, u_next = _probe_step(curve, u, v, limits)
        if delta <= limits.delta_max:
            safe = (v, u_next)
            break
        unsafe = v
        if math.isinf(delta):
            v *= 0.5
        else:
            v *= min(_FEED_BACKOFF_CAP, math.sqrt(limits.delta_max / delta))
        if not v > 0.0:
            break
    if safe is None:
        raise ScanConvergenceError(
            f"feed adjustment did not converge at u={u:.6f}"
        )
    if unsafe is None:
        return safe
    lo, hi = safe[0], unsafe
    for _ in range(_BRACKET_REFINE_ITERATIONS):
        mid = 0.5 * (lo + hi)
        delta, u_next = _probe_step(curve, u, mid, limits)
        if delta <= limits.delta_max:
            safe = (mid, u_next)
            lo = mid
        else:
            hi = mid
    return safe


def _curvature_feed(curve: ParametricCurve, u: float, limits: Limits) -> float:
    """Steady-state chord-safe feed from the local osculating radius."""
    rho = curvature_radius(curve, u)
    if math.isinf(rho):
        return limits.v_max
    d = min(limits.delta_max, rho)
    v = (2.0 / limits.Ts) * math.sqrt(d * (2.0 * rho - d))
    return min(limits.v_max, v)


def _refine_wells(curve, us, vs, limits):
    """Extra ceiling probes beside dips the walk may have undersampled.

    The walk measures the ceiling only at the parameters its own steps
    land on, so a curvature well narrower than those steps can hide its
    true minimum between two samples; a replay tick entering at a less
    lucky phase then crosses the well faster than a fresh probe there
    would allow. Probing the midpoints flanking each material dip and
    keeping any deeper readings restores a floor worth pinning feeds to.
    """
    extra = []
    for i in range(1, len(us) - 1):
        if vs[i] > min(vs[i - 1], vs[i + 1]):
            continue
        if max(vs[i - 1], vs[i + 1]) <= vs[i] * (1.0 + _WELL_REL_DEPTH):
            continue
        for m in (0.5 * (us[i - 1] + us[i]), 0.5 * (us[i] + us[i + 1])):
            try:
                v_m, _ = limit_feedrate(curve, m, limits)
            except ChordScanError:
                continue
            if v_m < vs[i]:
                extra.append((m, v_m))
    if not extra:
        return us, vs
    pairs = sorted(zip(us, vs)) + extra
    pairs.sort()
    return [p[0] for p in pairs], [p[1] for p in pairs]


def scan_curve(curve: ParametricCurve, limits: Limits) -> FeedrateScatter:
    """Walk the whole curve and record the feed ceiling at every step.

    The terminal step truncates at u = 1 before a full period elapses, so
    its probe would accept any feed; those samples fall back to the local
    curvature ceiling instead. A second pass re-probes the midpoints
    around every pronounced dip and keeps the deeper readings, since the
    walk's own landing phases can step over the bottom of a narrow well.
    """
    us = [0.0]
    vs: list[float] = []
    u = 0.0
    while u < 1.0:
        v, u_next = limit_feedrate(curve, u, limits)
        if u_next >= 1.0:
            us.append(1.0)
            vs.append(min(v, _curvature_feed(curve, u, limits)))
            break
        us.append(u_next)
        vs.append(v)
        u = u_next
        if len(us) > _MAX_SCAN_POINTS:
            raise ScanConvergenceError("scan produced too many points")
    vs.append(min(vs[-1], _curvature_feed(curve, 1.0, limits)))
    us, vs = _refine_wells(curve, us, vs, limits)
    return FeedrateScatter(us, vs)
