"""Self-intersection ratio: share of triangles properly crossing a non-adjacent triangle."""
import logging
from typing import Iterable, Tuple

import numpy as np
from rtree import index as rtree_index
from shapely.geometry import Polygon

from config import SIR_COPLANAR_EPSILON
from cad.mesh import TriangleMesh

logger = logging.getLogger(__name__)

COPLANAR_EPSILON = SIR_COPLANAR_EPSILON


def _plane_distances(points: np.ndarray, tri: np.ndarray, normal: np.ndarray, tol: float) -> np.ndarray:
    d = (points - tri[0]) @ normal
    d[np.abs(d) <= tol] = 0.0
    return d


def _line_interval(tri: np.ndarray, d: np.ndarray, direction: np.ndarray):
    """Interval of tri on the plane-plane intersection line, as projections onto direction."""
    p = tri @ direction
    values = [p[i] for i in range(3) if d[i] == 0.0]
    for i, j in ((0, 1), (1, 2), (2, 0)):
        if d[i] * d[j] < 0.0:
            values.append(p[i] + (p[j] - p[i]) * d[i] / (d[i] - d[j]))
    if not values:
        return None
    return min(values), max(values)


def _coplanar_overlap(a: np.ndarray, b: np.ndarray, normal: np.ndarray, tol: float) -> bool:
    drop = int(np.argmax(np.abs(normal)))
    keep = [k for k in range(3) if k != drop]
    overlap = Polygon(a[:, keep]).intersection(Polygon(b[:, keep])).area
    return overlap > tol * tol


def triangles_intersect(a: np.ndarray, b: np.ndarray, epsilon: float = COPLANAR_EPSILON) -> bool:
    """True when two (3, 3) triangles meet in a segment of positive length or a region of positive area.

    Touching at a point does not count. Distances below epsilon (scaled by the
    larger triangle extent) are treated as lying on the plane.
    """
    scale = max(float(np.ptp(a, axis=0).max()), float(np.ptp(b, axis=0).max()), 1.0)
    tol = epsilon * scale

    na = np.cross(a[1] - a[0], a[2] - a[0])
    nb = np.cross(b[1] - b[0], b[2] - b[0])
    la, lb = np.linalg.norm(na), np.linalg.norm(nb)
    if la <= tol * tol or lb <= tol * tol:
        return False
    na, nb = na / la, nb / lb

    da = _plane_distances(a, b, nb, tol)
    if np.all(da > 0) or np.all(da < 0):
        return False
    db = _plane_distances(b, a, na, tol)
    if np.all(db > 0) or np.all(db < 0):
        return False

    if not np.any(da) or not np.any(db):
        return _coplanar_overlap(a, b, na, tol)

    direction = np.cross(na, nb)
    length = np.linalg.norm(direction)
    if length <= tol:
        return _coplanar_overlap(a, b, na, tol)
    direction /= length

    ia = _line_interval(a, da, direction)
    ib = _line_interval(b, db, direction)
    if ia is None or ib is None:
        return False
    return min(ia[1], ib[1]) - max(ia[0], ib[0]) > tol


def _candidate_pairs_bvh(mesh: TriangleMesh, epsilon: float) -> Iterable[Tuple[int, int]]:
    corners = mesh.corners
    # padded so near-coplanar pairs within tolerance still overlap
    pad = epsilon * max(1.0, float(np.ptp(mesh.vertices, axis=0).max()))
    lo, hi = corners.min(axis=1) - pad, corners.max(axis=1) + pad
    boxes = np.hstack([lo, hi])
    properties = rtree_index.Property()
    properties.dimension = 3
    tree = rtree_index.Index(
        ((i, tuple(box), None) for i, box in enumerate(boxes)),
        properties=properties,
    )
    for i, box in enumerate(boxes):
        for j in tree.intersection(tuple(box)):
            if j > i:
                yield i, j


def _candidate_pairs_all(mesh: TriangleMesh) -> Iterable[Tuple[int, int]]:
    f = len(mesh.triangles)
    for i in range(f):
        for j in range(i + 1, f):
            yield i, j


def intersecting_triangles(mesh: TriangleMesh, accelerate: bool = True, epsilon: float = COPLANAR_EPSILON) -> np.ndarray:
    """Boolean mask of triangles that properly intersect a triangle sharing none of their vertices."""
    hit = np.zeros(len(mesh.triangles), dtype=bool)
    if mesh.is_empty:
        return hit
    corners = mesh.corners
    triangles = mesh.triangles
    pairs = _candidate_pairs_bvh(mesh, epsilon) if accelerate else _candidate_pairs_all(mesh)
    tested = 0
    for i, j in pairs:
        if np.intersect1d(triangles[i], triangles[j]).size:
            continue
        tested += 1
        if triangles_intersect(corners[i], corners[j], epsilon):
            hit[i] = hit[j] = True
    logger.debug(f"Tested {tested} triangle pairs, {int(hit.sum())} triangles intersect")
    return hit


def self_intersection_ratio(mesh: TriangleMesh, accelerate: bool = True) -> float:
    if mesh.is_empty:
        return 0.0
    return float(intersecting_triangles(mesh, accelerate).mean())
