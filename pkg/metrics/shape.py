"""Compactness and curvature metrics: sphericity, SD, mean curvature, DMCD."""
import itertools
import logging
import math

import numpy as np
import trimesh
from scipy.spatial import cKDTree

from config import CURVATURE_WEIGHTING, DMCD_NORMALIZATION, DMCD_RADIUS
from cad.mesh import TriangleMesh
from metrics.topology import EdgeAdjacency, NonPositiveVolume, NonWatertight, PrerequisiteNotMet, is_watertight

logger = logging.getLogger(__name__)


def sphericity(mesh: TriangleMesh) -> float:
    """Wadell sphericity pi^(1/3) (6V)^(2/3) / s; 1 for a sphere."""
    if not is_watertight(mesh):
        raise NonWatertight("sphericity needs a watertight mesh")
    volume = mesh.signed_volume()
    if not volume > 0:
        raise NonPositiveVolume(f"volume {volume!r}")
    return math.pi ** (1.0 / 3.0) * (6.0 * volume) ** (2.0 / 3.0) / mesh.area()


def sphericity_discrepancy(pred: TriangleMesh, gt: TriangleMesh) -> float:
    try:
        return abs(sphericity(pred) - sphericity(gt))
    except PrerequisiteNotMet as e:
        raise PrerequisiteNotMet(f"SD: {e}") from e


def signed_dihedral_angles(mesh: TriangleMesh, adjacency: EdgeAdjacency) -> np.ndarray:
    """Turning angle across each manifold edge, positive where the surface is convex."""
    cross = mesh.cross_products()
    normals = cross / np.linalg.norm(cross, axis=1, keepdims=True)
    pairs = np.array([[incident[0][0], incident[1][0]] for incident in adjacency.incidence], dtype=np.int64)
    n1, n2 = normals[pairs[:, 0]], normals[pairs[:, 1]]
    angles = np.arctan2(np.linalg.norm(np.cross(n1, n2), axis=1), np.einsum("ij,ij->i", n1, n2))

    # vertex of the second triangle that is not on the edge
    second = mesh.triangles[pairs[:, 1]]
    off_edge = (second != adjacency.edges[:, :1]) & (second != adjacency.edges[:, 1:])
    opposite = mesh.vertices[second[np.arange(len(second)), off_edge.argmax(axis=1)]]
    height = np.einsum("ij,ij->i", opposite - mesh.vertices[adjacency.edges[:, 0]], n1)
    return np.where(height > 0, -angles, angles)


def _point_segment_distance(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    t = np.einsum("ij,ij->i", points - a, ab) / np.einsum("ij,ij->i", ab, ab)
    closest = a + np.clip(t, 0.0, 1.0)[:, None] * ab
    return np.linalg.norm(points - closest, axis=1)


def mean_curvature_average(mesh: TriangleMesh, radius: float, weighting: str = CURVATURE_WEIGHTING) -> float:
    """Mean over vertices of the summed signed dihedral angles of edges within radius.

    An edge counts for a vertex when its closest point lies within radius.
    weighting="length" instead weights each angle by the edge length inside the
    ball (halved), the discrete curvature measure trimesh implements.
    """
    if not radius > 0:
        raise ValueError(f"radius must be > 0, got {radius}")
    if not is_watertight(mesh):
        raise NonWatertight("mean curvature needs a watertight mesh")

    used = np.unique(mesh.triangles)
    if weighting == "length":
        tm = mesh.to_trimesh()
        values = trimesh.curvature.discrete_mean_curvature_measure(tm, mesh.vertices[used], radius)
        return float(np.mean(values))
    if weighting != "count":
        raise ValueError(f"Unknown curvature weighting: {weighting}")

    adjacency = EdgeAdjacency.from_mesh(mesh)
    angles = signed_dihedral_angles(mesh, adjacency)
    a = mesh.vertices[adjacency.edges[:, 0]]
    b = mesh.vertices[adjacency.edges[:, 1]]
    midpoints = 0.5 * (a + b)
    reach = radius + 0.5 * np.linalg.norm(b - a, axis=1)

    tree = cKDTree(mesh.vertices[used])
    candidates = tree.query_ball_point(midpoints, reach)
    counts = [len(c) for c in candidates]
    edge_idx = np.repeat(np.arange(len(candidates)), counts)
    vert_idx = used[np.fromiter(itertools.chain.from_iterable(candidates), dtype=np.int64, count=sum(counts))]

    kappa = np.zeros(len(mesh.vertices))
    if len(edge_idx):
        distance = _point_segment_distance(mesh.vertices[vert_idx], a[edge_idx], b[edge_idx])
        inside = distance <= radius
        np.add.at(kappa, vert_idx[inside], angles[edge_idx[inside]])
    return float(kappa[used].mean())


def _normalization_scale(mesh: TriangleMesh) -> float:
    lo, hi = mesh.bounds()
    diagonal = float(np.linalg.norm(hi - lo))
    return 1.0 / diagonal if diagonal > 0 else 1.0


def dmcd(
    pred: TriangleMesh,
    gt: TriangleMesh,
    radius: float = DMCD_RADIUS,
    normalization: str = DMCD_NORMALIZATION,
    weighting: str = CURVATURE_WEIGHTING,
) -> float:
    """|mean curvature(pred) - mean curvature(gt)| after bounding-box normalisation.

    normalization: "per_mesh" scales each mesh to unit bounding-box diagonal,
    "ground_truth" scales both by the ground truth's diagonal, "none" keeps
    model units.
    """
    if not is_watertight(pred) or not is_watertight(gt):
        raise PrerequisiteNotMet("DMCD needs both meshes watertight")
    if normalization == "per_mesh":
        pred = pred.transformed(_normalization_scale(pred))
        gt = gt.transformed(_normalization_scale(gt))
    elif normalization == "ground_truth":
        scale = _normalization_scale(gt)
        pred, gt = pred.transformed(scale), gt.transformed(scale)
    elif normalization != "none":
        raise ValueError(f"Unknown DMCD normalization: {normalization}")
    return abs(
        mean_curvature_average(pred, radius, weighting) - mean_curvature_average(gt, radius, weighting)
    )
