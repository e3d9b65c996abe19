"""Curve tessellation into sketch-plane polylines."""
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from config import CHORD_TOLERANCE_FRACTION, MIN_SEGMENTS_PER_CIRCLE
from cad.errors import DegenerateCurve
from cad.sequence import Arc, Circle, Curve, Line, Loop, Profile, curve_control_points


@dataclass(frozen=True)
class TessellationParams:
    """Polyline density.

    chord_tolerance is the maximum sagitta in model units. When it is None the
    tolerance is derived per profile as relative_tolerance times the profile's
    bounding-box diagonal.
    """
    chord_tolerance: Optional[float] = None
    min_segments_per_circle: int = MIN_SEGMENTS_PER_CIRCLE
    relative_tolerance: float = CHORD_TOLERANCE_FRACTION

    def __post_init__(self):
        if self.chord_tolerance is not None and not self.chord_tolerance > 0:
            raise ValueError(f"chord_tolerance must be > 0, got {self.chord_tolerance}")
        if self.min_segments_per_circle < 8:
            raise ValueError(f"min_segments_per_circle must be >= 8, got {self.min_segments_per_circle}")
        if not self.relative_tolerance > 0:
            raise ValueError(f"relative_tolerance must be > 0, got {self.relative_tolerance}")

    def for_profile(self, profile: Profile) -> "TessellationParams":
        """Pin chord_tolerance to an absolute value for this profile."""
        if self.chord_tolerance is not None:
            return self
        points = np.vstack([curve_control_points(c) for loop in profile.loops for c in loop.curves])
        diagonal = float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))
        tolerance = self.relative_tolerance * diagonal if diagonal > 0 else self.relative_tolerance
        return TessellationParams(tolerance, self.min_segments_per_circle, self.relative_tolerance)


def _segments_for_span(span: float, radius: float, params: TessellationParams) -> int:
    tolerance = params.chord_tolerance
    if tolerance is None:
        tolerance = params.relative_tolerance * 2.0 * radius
    # half-angle of a chord whose sagitta equals the tolerance
    half_step = math.acos(max(-1.0, 1.0 - tolerance / radius))
    by_sagitta = math.ceil(span / (2.0 * half_step)) if half_step > 0 else 1
    by_minimum = math.ceil(params.min_segments_per_circle * span / (2.0 * math.pi))
    return max(1, by_sagitta, by_minimum)


def tessellate_curve(curve: Curve, params: TessellationParams) -> List[np.ndarray]:
    """Polyline approximation of a curve.

    Lines yield [start, end]; arcs yield start..end inclusive; circles yield a
    closed ring whose first point is not repeated.
    """
    if isinstance(curve, Line):
        return [np.array(curve.start, dtype=np.float64), np.array(curve.end, dtype=np.float64)]

    if isinstance(curve, Circle):
        if not curve.radius > 0:
            raise DegenerateCurve(f"circle radius must be positive, got {curve.radius}")
        n = _segments_for_span(2.0 * math.pi, curve.radius, params)
        angles = 2.0 * math.pi * np.arange(n) / n
        cx, cy = curve.center
        return [np.array((cx + curve.radius * math.cos(a), cy + curve.radius * math.sin(a))) for a in angles]

    if isinstance(curve, Arc):
        try:
            (ux, uy), radius = curve.circumcircle()
        except ValueError as e:
            raise DegenerateCurve(str(e)) from e
        span = curve.span()
        n = _segments_for_span(span, radius, params)
        direction = 1.0 if curve.is_ccw else -1.0
        a_start = math.atan2(curve.start[1] - uy, curve.start[0] - ux)
        points = [np.array(curve.start, dtype=np.float64)]
        for i in range(1, n):
            a = a_start + direction * span * i / n
            points.append(np.array((ux + radius * math.cos(a), uy + radius * math.sin(a))))
        points.append(np.array(curve.end, dtype=np.float64))
        return points

    raise TypeError(f"Unknown curve type: {type(curve).__name__}")


def loop_ring(loop: Loop, params: TessellationParams) -> np.ndarray:
    """Closed ring (n, 2) for a loop; the closing point is not repeated."""
    if loop.is_circle:
        return np.array(tessellate_curve(loop.curves[0], params))
    points: List[np.ndarray] = []
    for curve in loop.curves:
        # each curve's end is the next curve's start
        points.extend(tessellate_curve(curve, params)[:-1])
    return np.array(points)


def ring_signed_area(ring: np.ndarray) -> float:
    """Shoelace area, positive for counter-clockwise rings."""
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))
