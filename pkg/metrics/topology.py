"""Edge-incidence metrics: watertightness, Euler characteristic, DangEL, FluxEE, segments."""
from dataclasses import asdict, dataclass
from typing import List, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from config import SEGE_SCALE
from cad.mesh import TriangleMesh


class MetricError(ValueError):
    pass


class PrerequisiteNotMet(MetricError):
    """A pair metric needs both meshes watertight (and of positive volume)."""


class NonWatertight(PrerequisiteNotMet):
    pass


class NonPositiveVolume(PrerequisiteNotMet):
    pass


@dataclass(frozen=True)
class EdgeAdjacency:
    """Undirected edges (e, 2) with sorted endpoints and their incident triangles.

    incidence[k] lists (triangle, forward) pairs where forward is True when the
    triangle walks the edge from its lower to its higher vertex index.
    """
    edges: np.ndarray
    incidence: Tuple[Tuple[Tuple[int, bool], ...], ...]
    counts: np.ndarray
    edge_of_half: np.ndarray

    @classmethod
    def from_mesh(cls, mesh: TriangleMesh) -> "EdgeAdjacency":
        t = mesh.triangles
        half = np.stack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]], axis=1).reshape(-1, 2)
        forward = half[:, 0] < half[:, 1]
        keyed = np.sort(half, axis=1)
        if len(keyed):
            edges, inverse, counts = np.unique(keyed, axis=0, return_inverse=True, return_counts=True)
        else:
            edges, inverse, counts = np.zeros((0, 2), dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        inverse = inverse.reshape(-1)
        incidence: List[List[Tuple[int, bool]]] = [[] for _ in range(len(edges))]
        for h, e in enumerate(inverse):
            incidence[e].append((h // 3, bool(forward[h])))
        return cls(edges, tuple(tuple(i) for i in incidence), counts, inverse)

    def lengths(self, mesh: TriangleMesh) -> np.ndarray:
        v = mesh.vertices[self.edges]
        return np.linalg.norm(v[:, 1] - v[:, 0], axis=1)


@dataclass(frozen=True)
class MeshTopologyReport:
    vertex_count: int
    edge_count: int
    face_count: int
    euler_characteristic: int
    is_watertight: bool
    component_count: int

    def to_dict(self) -> dict:
        return asdict(self)


def _vertex_manifold(mesh: TriangleMesh) -> bool:
    """Every vertex's link (opposite edges of its triangles) is a single cycle."""
    t = mesh.triangles
    centre = t.reshape(-1)
    left = t[:, [1, 2, 0]].reshape(-1)
    right = t[:, [2, 0, 1]].reshape(-1)
    # link graph nodes are (centre, neighbour) pairs
    nodes = np.concatenate([np.stack([centre, left], 1), np.stack([centre, right], 1)])
    keys, ids = np.unique(nodes, axis=0, return_inverse=True)
    ids = ids.reshape(-1)
    n = len(centre)
    graph = coo_matrix((np.ones(n), (ids[:n], ids[n:])), shape=(len(keys), len(keys)))
    n_components, _ = connected_components(graph, directed=False)
    return n_components == len(np.unique(centre))


def is_watertight(mesh: TriangleMesh) -> bool:
    """Closed, consistently oriented 2-manifold."""
    if mesh.is_empty:
        return False
    adjacency = EdgeAdjacency.from_mesh(mesh)
    if np.any(adjacency.counts != 2):
        return False
    # exactly one forward and one backward traversal per edge
    for incident in adjacency.incidence:
        if incident[0][1] == incident[1][1]:
            return False
    return _vertex_manifold(mesh)


def euler_characteristic(mesh: TriangleMesh) -> int:
    """V - E + F over referenced vertices and distinct undirected edges."""
    if mesh.is_empty:
        return 0
    vertex_count = len(np.unique(mesh.triangles))
    edge_count = len(EdgeAdjacency.from_mesh(mesh).edges)
    return int(vertex_count - edge_count + len(mesh.triangles))


def segment_count(mesh: TriangleMesh) -> int:
    """Connected components of the triangle graph, triangles joined by shared edges."""
    if mesh.is_empty:
        return 0
    adjacency = EdgeAdjacency.from_mesh(mesh)
    rows, cols = [], []
    for incident in adjacency.incidence:
        first = incident[0][0]
        for other, _ in incident[1:]:
            rows.append(first)
            cols.append(other)
    f = len(mesh.triangles)
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(f, f))
    n_components, _ = connected_components(graph, directed=False)
    return int(n_components)


def topology_report(mesh: TriangleMesh) -> MeshTopologyReport:
    adjacency = EdgeAdjacency.from_mesh(mesh)
    vertex_count = len(np.unique(mesh.triangles)) if not mesh.is_empty else 0
    edge_count = len(adjacency.edges)
    face_count = len(mesh.triangles)
    return MeshTopologyReport(
        vertex_count=vertex_count,
        edge_count=edge_count,
        face_count=face_count,
        euler_characteristic=vertex_count - edge_count + face_count,
        is_watertight=is_watertight(mesh),
        component_count=segment_count(mesh),
    )


def eecm(pred: TriangleMesh, gt: TriangleMesh) -> int:
    """1 when the Euler characteristics match; both meshes must be watertight."""
    if not is_watertight(pred) or not is_watertight(gt):
        raise PrerequisiteNotMet("EECM needs both meshes watertight")
    return int(euler_characteristic(pred) == euler_characteristic(gt))


def dangling_edge_length(mesh: TriangleMesh) -> float:
    """Total length of edges used by fewer than two triangles."""
    adjacency = EdgeAdjacency.from_mesh(mesh)
    open_edges = adjacency.counts < 2
    return float(adjacency.lengths(mesh)[open_edges].sum())


def flux_enclosure_error(mesh: TriangleMesh) -> float:
    """|sum of area-weighted normals| / total area; zero for a closed surface."""
    if mesh.is_empty:
        return 0.0
    cross = mesh.cross_products()
    total_area = 0.5 * float(np.linalg.norm(cross, axis=1).sum())
    if total_area == 0.0:
        return 0.0
    return float(np.linalg.norm(0.5 * cross.sum(axis=0)) / total_area)


def segment_error(pred: TriangleMesh, gt: TriangleMesh, scale: float = SEGE_SCALE) -> float:
    return scale * abs(segment_count(pred) - segment_count(gt))

