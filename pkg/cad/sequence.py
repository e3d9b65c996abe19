"""Typed sketch-and-extrude construction history."""
from dataclasses import dataclass
from enum import Enum
from typing import ClassVar, Tuple, Union

import numpy as np

Vec2 = Tuple[float, float]
Vec3 = Tuple[float, float, float]


class Operation(str, Enum):
    """Boolean role of an extrusion relative to the bodies built so far."""
    NEW_BODY = "new_body"
    JOIN = "join"
    CUT = "cut"
    INTERSECT = "intersect"


@dataclass(frozen=True)
class CoordinateSystem:
    """Sketch plane placement: sketch (u, v) maps to origin + u*x_axis + v*y_axis."""
    origin: Vec3
    x_axis: Vec3
    y_axis: Vec3
    z_axis: Vec3

    @classmethod
    def identity(cls) -> "CoordinateSystem":
        return cls((0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))

    def to_world(self, uv: np.ndarray, offset: float = 0.0) -> np.ndarray:
        """Map (n, 2) sketch points to (n, 3) world points shifted along z_axis."""
        uv = np.atleast_2d(np.asarray(uv, dtype=np.float64))
        return (
            np.asarray(self.origin)
            + uv[:, :1] * np.asarray(self.x_axis)
            + uv[:, 1:2] * np.asarray(self.y_axis)
            + offset * np.asarray(self.z_axis)
        )


@dataclass(frozen=True)
class Line:
    kind: ClassVar[str] = "line"
    start: Vec2
    end: Vec2


@dataclass(frozen=True)
class Arc:
    """Three-point arc running from start through mid to end."""
    kind: ClassVar[str] = "arc"
    start: Vec2
    end: Vec2
    mid: Vec2

    def circumcircle(self) -> Tuple[Vec2, float]:
        """Return (center, radius); raises ValueError for collinear points."""
        (ax, ay), (bx, by), (cx, cy) = self.start, self.mid, self.end
        d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
        scale = max(abs(ax), abs(ay), abs(bx), abs(by), abs(cx), abs(cy), 1.0)
        if abs(d) <= 1e-12 * scale * scale:
            raise ValueError("arc points are collinear")
        a2, b2, c2 = ax * ax + ay * ay, bx * bx + by * by, cx * cx + cy * cy
        ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d
        uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d
        return (ux, uy), float(np.hypot(ax - ux, ay - uy))

    @property
    def is_ccw(self) -> bool:
        (ax, ay), (bx, by), (cx, cy) = self.start, self.mid, self.end
        return (bx - ax) * (cy - by) - (by - ay) * (cx - bx) > 0

    def span(self) -> float:
        """Swept angle in radians, always in (0, 2*pi)."""
        (ux, uy), _ = self.circumcircle()
        a_start = np.arctan2(self.start[1] - uy, self.start[0] - ux)
        a_end = np.arctan2(self.end[1] - uy, self.end[0] - ux)
        if self.is_ccw:
            return float((a_end - a_start) % (2 * np.pi))
        return float((a_start - a_end) % (2 * np.pi))


@dataclass(frozen=True)
class Circle:
    kind: ClassVar[str] = "circle"
    center: Vec2
    radius: float


Curve = Union[Line, Arc, Circle]


@dataclass(frozen=True)
class Loop:
    curves: Tuple[Curve, ...]

    @property
    def is_circle(self) -> bool:
        return len(self.curves) == 1 and isinstance(self.curves[0], Circle)


@dataclass(frozen=True)
class Profile:
    """Sketch face: loops[0] is the outer boundary, the rest are holes."""
    loops: Tuple[Loop, ...]


@dataclass(frozen=True)
class Extrusion:
    distance_toward: float
    distance_opposite: float
    operation: Operation
    sketch_scale: float

    @property
    def extent(self) -> float:
        return self.distance_toward + self.distance_opposite


@dataclass(frozen=True)
class Part:
    coordinate_system: CoordinateSystem
    profiles: Tuple[Profile, ...]
    extrusion: Extrusion


@dataclass(frozen=True)
class CadSequence:
    parts: Tuple[Part, ...]

    @property
    def curve_count(self) -> int:
        return sum(len(loop.curves) for part in self.parts for profile in part.profiles for loop in profile.loops)


def curve_control_points(curve: Curve) -> np.ndarray:
    """Points bounding a curve in sketch coordinates (circle: center +/- radius)."""
    if isinstance(curve, Line):
        return np.array([curve.start, curve.end], dtype=np.float64)
    if isinstance(curve, Arc):
        return np.array([curve.start, curve.mid, curve.end], dtype=np.float64)
    cx, cy = curve.center
    r = curve.radius
    return np.array([(cx - r, cy - r), (cx + r, cy + r)], dtype=np.float64)
