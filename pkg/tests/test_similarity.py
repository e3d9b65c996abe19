import numpy as np
import pytest

from cad.kernel import build_model
from cad.sequence import CoordinateSystem, Operation
from metrics.similarity import (
    EmptyCloud,
    F1Result,
    PointCloud,
    PrimitiveRecord,
    chamfer_distance,
    extract_primitives,
    f1_per_type,
    normalized_chamfer,
    sequence_extent,
)

from conftest import box_mesh, circle_loop, cube_seq, make_part, make_seq, square_loop


def brute_force_chamfer(p: np.ndarray, q: np.ndarray) -> float:
    d2 = ((p[:, None, :] - q[None, :, :]) ** 2).sum(axis=2)
    return float(d2.min(axis=1).mean() + d2.min(axis=0).mean())


class TestChamfer:
    def test_single_points(self):
        assert chamfer_distance(PointCloud([[0.0, 0.0, 0.0]]), PointCloud([[1.0, 0.0, 0.0]])) == 2.0

    def test_identical(self):
        cloud = PointCloud(np.random.default_rng(0).normal(size=(100, 3)))
        assert chamfer_distance(cloud, cloud) == 0.0

    def test_symmetric(self):
        rng = np.random.default_rng(2)
        p, q = PointCloud(rng.normal(size=(50, 3))), PointCloud(rng.normal(size=(70, 3)))
        assert chamfer_distance(p, q) == pytest.approx(chamfer_distance(q, p), rel=1e-12)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            p, q = rng.normal(size=(64, 3)), rng.normal(size=(64, 3))
            assert chamfer_distance(PointCloud(p), PointCloud(q)) == pytest.approx(brute_force_chamfer(p, q), rel=1e-12)

    def test_empty_cloud(self):
        with pytest.raises(EmptyCloud):
            chamfer_distance(PointCloud(np.zeros((0, 3))), PointCloud([[0.0, 0.0, 0.0]]))

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            PointCloud([[0.0, np.inf, 0.0]])


class TestNormalizedChamfer:
    def test_identical_meshes(self, unit_cube):
        assert normalized_chamfer(unit_cube, unit_cube, n=2048, seed=3) == 0.0

    def test_offset_prediction(self, unit_cube):
        near = normalized_chamfer(box_mesh((0.05, 0, 0), (1.05, 1, 1)), unit_cube, n=2048, seed=3)
        far = normalized_chamfer(box_mesh((0.5, 0, 0), (1.5, 1, 1)), unit_cube, n=2048, seed=3)
        assert 0.0 < near < far

    def test_report_scale(self, unit_cube):
        pred = box_mesh((0.2, 0, 0), (1.2, 1, 1))
        raw = normalized_chamfer(pred, unit_cube, n=1024, seed=1, report_scale=1.0)
        assert normalized_chamfer(pred, unit_cube, n=1024, seed=1) == pytest.approx(raw * 1000.0, rel=1e-12)

    def test_deterministic_for_seed(self, unit_cube):
        pred = build_model(cube_seq(0.8, 0.1, 0.1))
        assert normalized_chamfer(pred, unit_cube, n=512, seed=7) == normalized_chamfer(pred, unit_cube, n=512, seed=7)


class TestPrimitiveRecords:
    def test_cube_records(self):
        records = extract_primitives(cube_seq())
        assert [r.kind for r in records] == ["line"] * 4 + ["extrusion"]
        assert records[-1].params == (1.0, 1.0, 0.0, 0.0, 0.0, 1.0)

    def test_line_direction_is_canonical(self):
        forward = extract_primitives(make_seq(make_part(square_loop())))
        backward = extract_primitives(make_seq(make_part(square_loop(clockwise=True))))
        assert sorted(r.params for r in forward[:4]) == sorted(r.params for r in backward[:4])

    def test_record_validation(self):
        with pytest.raises(ValueError):
            PrimitiveRecord("spline", (0.0,))
        with pytest.raises(ValueError):
            PrimitiveRecord("line", (0.0, 0.0))

    def test_sequence_extent(self):
        assert sequence_extent(cube_seq(2.0)) == pytest.approx(np.sqrt(8.0))
        assert sequence_extent(cube_seq(), cube_seq(1.0, 3.0, 0.0)) == pytest.approx(np.sqrt(17.0))


class TestF1:
    def test_from_counts(self):
        result = F1Result.from_counts(tp=1, n_pred=1, n_gt=2)
        assert (result.precision, result.recall) == (1.0, 0.5)
        assert result.f1 == pytest.approx(2 / 3)
        assert (result.fp, result.fn) == (0, 1)
        assert F1Result.from_counts(0, 0, 3).f1 == 0.0

    def test_identical_sequences(self):
        seq = make_seq(
            make_part([square_loop(0, 0, 4), circle_loop(2, 2, 0.5)], toward=1.0),
            make_part(circle_loop(1, 1, 0.3), toward=2.0, op=Operation.JOIN),
        )
        results = f1_per_type(seq, seq)
        assert set(results) == {"line", "circle", "extrusion"}
        assert all(r.f1 == 1.0 for r in results.values())

    def test_absent_kinds_are_omitted(self):
        assert set(f1_per_type(cube_seq(), cube_seq())) == {"line", "extrusion"}

    def test_missing_circle(self):
        gt = make_seq(make_part([square_loop(0, 0, 4), circle_loop(1, 1, 0.5), circle_loop(3, 3, 0.5)]))
        pred = make_seq(make_part([square_loop(0, 0, 4), circle_loop(1, 1, 0.5)]))
        circle = f1_per_type(pred, gt)["circle"]
        assert (circle.precision, circle.recall) == (1.0, 0.5)
        assert circle.f1 == pytest.approx(2 / 3)

    def test_displaced_circle(self):
        gt = make_seq(make_part(circle_loop(0, 0, 1)))
        pred = make_seq(make_part(circle_loop(10, 0, 1)))
        results = f1_per_type(pred, gt)
        assert results["circle"].f1 == 0.0
        assert results["extrusion"].f1 == 1.0

    def test_circle_normal_follows_frame(self):
        tilted = CoordinateSystem((0.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0), (1.0, 0.0, 0.0))
        gt = make_seq(make_part(circle_loop(0, 0, 1)))
        pred = make_seq(make_part(circle_loop(0, 0, 1), cs=tilted))
        assert f1_per_type(pred, gt)["circle"].f1 == 0.0

    def test_operation_mismatch(self):
        gt = make_seq(make_part(square_loop()), make_part(circle_loop(0.5, 0.5, 0.2), op=Operation.JOIN))
        pred = make_seq(make_part(square_loop()), make_part(circle_loop(0.5, 0.5, 0.2), op=Operation.CUT))
        extrusion = f1_per_type(pred, gt)["extrusion"]
        assert extrusion.tp == 1
        assert extrusion.f1 == 0.5

    def test_tau_controls_matching(self):
        gt = make_seq(make_part(circle_loop(0, 0, 1.0)))
        pred = make_seq(make_part(circle_loop(0.1, 0, 1.0)))
        assert f1_per_type(pred, gt, tau=0.01)["circle"].f1 == 0.0
        assert f1_per_type(pred, gt, tau=0.2)["circle"].f1 == 1.0
