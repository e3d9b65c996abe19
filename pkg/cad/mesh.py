"""Indexed triangle mesh shared by the kernel and the metrics."""
from dataclasses import dataclass
from typing import Iterable

import numpy as np
import trimesh


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """vertices (n, 3) float64; triangles (m, 3) int64, counter-clockwise seen from outside."""
    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        vertices = np.ascontiguousarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        triangles = np.ascontiguousarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        vertices.setflags(write=False)
        triangles.setflags(write=False)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "triangles", triangles)

    @classmethod
    def empty(cls) -> "TriangleMesh":
        return cls(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))

    @classmethod
    def from_trimesh(cls, mesh: trimesh.Trimesh) -> "TriangleMesh":
        return cls(np.asarray(mesh.vertices), np.asarray(mesh.faces))

    @classmethod
    def concatenate(cls, meshes: Iterable["TriangleMesh"]) -> "TriangleMesh":
        """Disjoint union: vertex indices of later meshes are offset."""
        vertices, triangles, offset = [], [], 0
        for mesh in meshes:
            vertices.append(mesh.vertices)
            triangles.append(mesh.triangles + offset)
            offset += len(mesh.vertices)
        if not vertices:
            return cls.empty()
        return cls(np.vstack(vertices), np.vstack(triangles))

    def to_trimesh(self) -> trimesh.Trimesh:
        return trimesh.Trimesh(vertices=self.vertices.copy(), faces=self.triangles.copy(), process=False)

    @property
    def is_empty(self) -> bool:
        return len(self.triangles) == 0

    @property
    def corners(self) -> np.ndarray:
        """(m, 3, 3) triangle corner coordinates."""
        return self.vertices[self.triangles]

    def cross_products(self) -> np.ndarray:
        """Per-triangle (v1 - v0) x (v2 - v0); length is twice the area."""
        c = self.corners
        return np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])

    def triangle_areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self.cross_products(), axis=1)

    def area(self) -> float:
        return float(self.triangle_areas().sum())

    def signed_volume(self) -> float:
        """Divergence-theorem volume sum of v0 . (v1 x v2) / 6."""
        if self.is_empty:
            return 0.0
        c = self.corners
        return float(np.einsum("ij,ij->i", c[:, 0], np.cross(c[:, 1], c[:, 2])).sum() / 6.0)

    def bounds(self) -> np.ndarray:
        """(2, 3) min/max corner over referenced vertices."""
        used = self.vertices[np.unique(self.triangles)] if not self.is_empty else self.vertices
        if len(used) == 0:
            return np.zeros((2, 3))
        return np.vstack([used.min(axis=0), used.max(axis=0)])

    def transformed(self, scale: float = 1.0, translation=(0.0, 0.0, 0.0)) -> "TriangleMesh":
        """Uniform scale about the origin followed by a translation."""
        return TriangleMesh(self.vertices * scale + np.asarray(translation, dtype=np.float64), self.triangles)

    def without_triangles(self, indices) -> "TriangleMesh":
        keep = np.ones(len(self.triangles), dtype=bool)
        keep[np.asarray(indices, dtype=np.int64)] = False
        return TriangleMesh(self.vertices, self.triangles[keep])

    def same_as(self, other: "TriangleMesh") -> bool:
        return np.array_equal(self.vertices, other.vertices) and np.array_equal(self.triangles, other.triangles)
