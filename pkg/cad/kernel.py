"""Sketch-and-extrude geometry kernel.

Profiles are tessellated and ear-clipped, extruded into closed prisms placed by
their coordinate system, and folded into a scene: new_body adds a disjoint
body, join/cut/intersect run a regularized mesh boolean.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import mapbox_earcut
import numpy as np
import trimesh
from shapely.geometry import LinearRing, Polygon

from config import MIN_TRIANGLE_AREA
from cad.errors import (
    BooleanFailure,
    EmptyMesh,
    EmptyResult,
    HoleOutsideOuter,
    KernelError,
    OverlappingHoles,
    SelfIntersectingLoop,
    TriangulationFailure,
    ZeroExtent,
)
from cad.mesh import TriangleMesh
from cad.sequence import CadSequence, CoordinateSystem, Extrusion, Operation, Profile
from cad.tessellate import TessellationParams, loop_ring, ring_signed_area

logger = logging.getLogger(__name__)

BOOLEAN_OPS = ("union", "difference", "intersection")


@dataclass(frozen=True, eq=False)
class Polygon2D:
    """Sketch face: outer ring counter-clockwise, hole rings clockwise."""
    outer: np.ndarray
    holes: Tuple[np.ndarray, ...] = field(default_factory=tuple)

    @property
    def rings(self) -> List[np.ndarray]:
        return [self.outer, *self.holes]

    def area(self) -> float:
        return ring_signed_area(self.outer) + sum(ring_signed_area(h) for h in self.holes)


def _clean_ring(ring: np.ndarray) -> np.ndarray:
    """Drop repeated and collinear points so every ring vertex is a true corner."""
    points = list(ring)
    changed = True
    while changed and len(points) > 3:
        changed = False
        for i in range(len(points)):
            prev, cur, nxt = points[i - 1], points[i], points[(i + 1) % len(points)]
            a, b = cur - prev, nxt - cur
            scale = float(np.dot(a, a) + np.dot(b, b))
            cross = a[0] * b[1] - a[1] * b[0]
            if scale == 0.0 or abs(cross) <= 1e-12 * scale:
                del points[i]
                changed = True
                break
    return np.array(points)


def build_profile(profile: Profile, params: TessellationParams) -> Polygon2D:
    """Tessellate a profile into oriented rings, checking simplicity and hole placement."""
    params = params.for_profile(profile)
    raw = [loop_ring(loop, params) for loop in profile.loops]

    rings = []
    for i, points in enumerate(raw):
        if len(points) < 3:
            raise SelfIntersectingLoop("loop has fewer than three distinct points", loop_index=i)
        ring = LinearRing(points)
        if not ring.is_simple or Polygon(ring).area <= 0:
            raise SelfIntersectingLoop("loop is not a simple closed ring", loop_index=i)
        rings.append(ring)

    outer = Polygon(rings[0])
    holes = [Polygon(r) for r in rings[1:]]
    for i, hole in enumerate(holes, start=1):
        if not outer.contains(hole) or rings[0].intersects(rings[i]):
            raise HoleOutsideOuter("hole is not strictly inside the outer loop", loop_index=i)
    for i in range(len(holes)):
        for j in range(i + 1, len(holes)):
            if holes[i].intersects(holes[j]):
                raise OverlappingHoles(f"hole overlaps loop {i + 1}", loop_index=j + 1)

    oriented = []
    for i, points in enumerate(raw):
        points = _clean_ring(points)
        ccw = ring_signed_area(points) > 0
        if ccw != (i == 0):
            points = points[::-1]
        oriented.append(np.ascontiguousarray(points, dtype=np.float64))
    return Polygon2D(oriented[0], tuple(oriented[1:]))


def triangulate_indices(poly: Polygon2D) -> Tuple[np.ndarray, np.ndarray]:
    """Ear-clip with hole bridging; returns (vertices (n, 2), triangles (t, 3)) with CCW triangles."""
    vertices = np.vstack(poly.rings)
    ring_ends = np.cumsum([len(r) for r in poly.rings]).astype(np.uint32)
    if any(len(r) < 3 for r in poly.rings):
        raise TriangulationFailure("ring has fewer than three points")

    flat = mapbox_earcut.triangulate_float64(vertices, ring_ends)
    triangles = np.asarray(flat, dtype=np.int64).reshape(-1, 3)
    if len(triangles) == 0:
        raise TriangulationFailure("ear clipping produced no triangles")

    c = vertices[triangles]
    doubled = (c[:, 1, 0] - c[:, 0, 0]) * (c[:, 2, 1] - c[:, 0, 1]) - (c[:, 1, 1] - c[:, 0, 1]) * (c[:, 2, 0] - c[:, 0, 0])
    flip = doubled < 0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]

    expected = poly.area()
    total = 0.5 * float(np.abs(doubled).sum())
    if abs(total - expected) > 1e-9 * max(expected, 1.0):
        raise TriangulationFailure(f"triangle area {total!r} differs from polygon area {expected!r}")
    if len(np.unique(triangles)) != len(vertices):
        raise TriangulationFailure("ring vertex left out of the triangulation")
    if np.any(0.5 * np.abs(doubled) < MIN_TRIANGLE_AREA):
        raise TriangulationFailure("degenerate triangle in cap")
    return vertices, triangles


def triangulate(poly: Polygon2D) -> np.ndarray:
    """Triangles as (t, 3, 2) sketch coordinates."""
    vertices, triangles = triangulate_indices(poly)
    return vertices[triangles]


def extrude_profile(poly: Polygon2D, extrusion: Extrusion, cs: CoordinateSystem) -> TriangleMesh:
    """Closed prism from -distance_opposite to +distance_toward along the sketch normal."""
    if not extrusion.extent > 0:
        raise ZeroExtent("distance_toward + distance_opposite must be positive")

    uv, caps = triangulate_indices(poly)
    uv = uv * extrusion.sketch_scale
    n = len(uv)
    bottom = cs.to_world(uv, -extrusion.distance_opposite)
    top = cs.to_world(uv, extrusion.distance_toward)

    walls = []
    start = 0
    for ring in poly.rings:
        i = np.arange(start, start + len(ring))
        j = np.roll(i, -1)
        # outer rings run CCW and holes CW, so the solid is always on the left
        walls.append(np.column_stack([i, j, j + n]))
        walls.append(np.column_stack([i, j + n, i + n]))
        start += len(ring)

    triangles = np.vstack([caps[:, [0, 2, 1]], caps + n, *walls])
    return TriangleMesh(np.vstack([bottom, top]), triangles)


def boolean(a: TriangleMesh, b: TriangleMesh, op: str) -> TriangleMesh:
    """Regularized boolean of two closed meshes; an empty result has no triangles.

    manifold evaluates in float32: topology is exact, volumes hold to about 1e-7 relative.
    """
    if op not in BOOLEAN_OPS:
        raise ValueError(f"Unsupported boolean operation: {op}")

    if a.is_empty or b.is_empty:
        if op == "union":
            return b if a.is_empty else a
        if op == "difference":
            return a
        return TriangleMesh.empty()

    try:
        result = getattr(trimesh.boolean, op)(
            [a.to_trimesh(), b.to_trimesh()], engine="manifold", check_volume=False
        )
    except Exception as e:
        raise BooleanFailure(f"{op} failed: {e}") from e

    out = TriangleMesh.from_trimesh(result)
    if out.is_empty:
        logger.warning(f"Boolean {op} produced an empty result")
    return out


_OP_TO_BOOLEAN = {
    Operation.JOIN: "union",
    Operation.CUT: "difference",
    Operation.INTERSECT: "intersection",
}


def build_part(profiles, extrusion: Extrusion, cs: CoordinateSystem, params: TessellationParams) -> TriangleMesh:
    """Tool body of one part: the union of its extruded profiles."""
    tool = None
    for profile in profiles:
        prism = extrude_profile(build_profile(profile, params), extrusion, cs)
        tool = prism if tool is None else boolean(tool, prism, "union")
    return tool


def build_model(seq: CadSequence, params: TessellationParams = None) -> TriangleMesh:
    """Left fold over parts into the final scene mesh."""
    params = params or TessellationParams()
    scene = TriangleMesh.empty()
    for index, part in enumerate(seq.parts):
        try:
            tool = build_part(part.profiles, part.extrusion, part.coordinate_system, params)
            op = part.extrusion.operation
            if op is Operation.NEW_BODY:
                scene = TriangleMesh.concatenate([scene, tool])
            else:
                scene = boolean(scene, tool, _OP_TO_BOOLEAN[op])
        except KernelError as e:
            e.part_index = index
            raise
        logger.debug(f"Part {index} ({part.extrusion.operation.value}): {len(scene.triangles)} triangles")

    if scene.is_empty:
        raise EmptyResult("construction sequence produced no geometry", part_index=len(seq.parts) - 1)
    return scene


def sample_surface(mesh: TriangleMesh, n: int, seed: int) -> np.ndarray:
    """n points, triangles picked by area, uniform inside each triangle."""
    if n < 0:
        raise ValueError(f"sample count must be >= 0, got {n}")
    if mesh.is_empty:
        raise EmptyMesh("cannot sample an empty mesh")
    if n == 0:
        return np.zeros((0, 3))

    rng = np.random.default_rng(seed)
    areas = mesh.triangle_areas()
    total = areas.sum()
    if not total > 0:
        raise EmptyMesh("mesh has zero surface area")
    chosen = rng.choice(len(areas), size=n, p=areas / total)
    r1 = np.sqrt(rng.random(n))[:, None]
    r2 = rng.random(n)[:, None]
    c = mesh.corners[chosen]
    return (1.0 - r1) * c[:, 0] + r1 * (1.0 - r2) * c[:, 1] + r1 * r2 * c[:, 2]
