import numpy as np
import pytest

from cad.kernel import boolean, build_model
from cad.mesh import TriangleMesh
from metrics.intersection import intersecting_triangles, self_intersection_ratio, triangles_intersect

from conftest import box_mesh, holed_block_seq, icosphere_mesh

FLAT = np.array([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 2.0, 0.0]])


def _soup(*triangles) -> TriangleMesh:
    """Mesh whose triangles share no vertex indices."""
    vertices = np.vstack(triangles)
    return TriangleMesh(vertices, np.arange(len(vertices)).reshape(-1, 3))


class TestTrianglePair:
    def test_crossing(self):
        crossing = np.array([[0.5, 0.5, -1.0], [0.6, 0.6, 1.0], [0.2, 0.9, 1.0]])
        assert triangles_intersect(FLAT, crossing)
        assert triangles_intersect(crossing, FLAT)

    def test_separated(self):
        assert not triangles_intersect(FLAT, FLAT + [0.0, 0.0, 1.0])

    def test_touching_at_a_point(self):
        apex_down = np.array([[0.5, 0.5, 0.0], [1.0, 0.5, 1.0], [0.5, 1.0, 1.0]])
        assert not triangles_intersect(FLAT, apex_down)

    def test_coplanar_overlap(self):
        inner = np.array([[0.5, 0.5, 0.0], [1.5, 0.5, 0.0], [0.5, 1.5, 0.0]])
        assert triangles_intersect(FLAT, inner)

    def test_coplanar_disjoint(self):
        assert not triangles_intersect(FLAT, FLAT + [5.0, 0.0, 0.0])

    def test_degenerate(self):
        sliver = np.array([[0.5, 0.5, -1.0], [0.5, 0.5, 0.0], [0.5, 0.5, 1.0]])
        assert not triangles_intersect(FLAT, sliver)


class TestSelfIntersectionRatio:
    def test_convex_mesh(self, unit_cube):
        assert self_intersection_ratio(unit_cube) == 0.0
        assert self_intersection_ratio(icosphere_mesh(2)) == 0.0

    def test_kernel_outputs(self):
        assert self_intersection_ratio(build_model(holed_block_seq(2))) == 0.0
        joined = boolean(box_mesh(), box_mesh((0.5, 0.5, 0.5), (1.5, 1.5, 1.5)), "union")
        assert self_intersection_ratio(joined) == 0.0

    def test_two_crossing_triangles(self):
        mesh = _soup(FLAT, np.array([[0.5, 0.5, -1.0], [0.6, 0.6, 1.0], [0.2, 0.9, 1.0]]))
        assert self_intersection_ratio(mesh) == 1.0

    def test_triangle_stabbing_cube_face(self, unit_cube):
        stab = np.array([[0.1, 0.5, 0.5], [0.9, 0.6, 0.5], [0.5, 0.55, 1.5]])
        n = len(unit_cube.vertices)
        mesh = TriangleMesh(
            np.vstack([unit_cube.vertices, stab]),
            np.vstack([unit_cube.triangles, [[n, n + 1, n + 2]]]),
        )
        hit = intersecting_triangles(mesh)
        assert hit[-1]
        assert hit.sum() == 3
        assert self_intersection_ratio(mesh) == pytest.approx(3 / 13)

    def test_shared_vertex_pairs_skipped(self):
        # a fan folded onto itself only meets at shared vertices and edges
        vertices = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.5, 0.0]])
        mesh = TriangleMesh(vertices, np.array([[0, 1, 2], [0, 1, 3]]))
        assert self_intersection_ratio(mesh) == 0.0

    def test_empty(self):
        assert self_intersection_ratio(TriangleMesh.empty()) == 0.0

    def test_index_matches_brute_force(self):
        rng = np.random.default_rng(5)
        sizes = rng.integers(2, 201, size=100)
        sizes[0] = 200
        for n in sizes:
            # small triangles; about a quarter reuse a vertex of an earlier one
            vertices = (rng.uniform(0.0, 1.0, size=(n, 1, 3)) + rng.normal(0.0, 0.08, size=(n, 3, 3))).reshape(-1, 3)
            triangles = np.arange(3 * n).reshape(n, 3)
            for t in range(1, n):
                if rng.random() < 0.25:
                    triangles[t, 0] = triangles[rng.integers(0, t), rng.integers(0, 3)]
            mesh = TriangleMesh(vertices, triangles)
            assert np.array_equal(
                intersecting_triangles(mesh, accelerate=True),
                intersecting_triangles(mesh, accelerate=False),
            )
