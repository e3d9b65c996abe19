"""Point-cloud and construction-sequence similarity: Chamfer distance and per-primitive F1."""
import logging
import math
from dataclasses import asdict, dataclass
from typing import ClassVar, Dict, List, Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

from config import CD_REPORT_SCALE, CD_SAMPLE_COUNT, F1_TAU, SEED
from cad.kernel import sample_surface
from cad.mesh import TriangleMesh
from cad.sequence import Arc, CadSequence, Circle, Line, Operation, Part, curve_control_points
from metrics.hungarian import hungarian
from metrics.topology import MetricError

logger = logging.getLogger(__name__)

PRIMITIVE_KINDS = ("line", "arc", "circle", "extrusion")


class EmptyCloud(MetricError):
    pass


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(points)):
            raise ValueError("point cloud has non-finite coordinates")
        object.__setattr__(self, "points", points)

    @property
    def count(self) -> int:
        return len(self.points)

    @classmethod
    def sample(cls, mesh: TriangleMesh, n: int, seed: int) -> "PointCloud":
        return cls(sample_surface(mesh, n, seed), seed)


def _directed(source: np.ndarray, target: np.ndarray, tree: cKDTree) -> float:
    _, nearest = tree.query(source)
    # squared distance recomputed from coordinates, not taken from the tree
    return float(np.mean(np.sum((source - target[nearest]) ** 2, axis=1)))


def chamfer_distance(p: PointCloud, q: PointCloud) -> float:
    """Symmetric mean squared nearest-neighbour distance, in squared model units."""
    if p.count == 0 or q.count == 0:
        raise EmptyCloud("Chamfer distance needs two non-empty clouds")
    return _directed(p.points, q.points, cKDTree(q.points)) + _directed(q.points, p.points, cKDTree(p.points))


def normalized_chamfer(
    pred: TriangleMesh,
    gt: TriangleMesh,
    n: int = CD_SAMPLE_COUNT,
    seed: int = SEED,
    report_scale: float = CD_REPORT_SCALE,
) -> float:
    """Chamfer distance after mapping the ground truth into [-1, 1]^3, times report_scale.

    Both meshes get the ground truth's transform, so a prediction of the wrong
    overall size is penalised.
    """
    lo, hi = gt.bounds()
    half_extent = float((hi - lo).max()) / 2.0
    scale = 1.0 / half_extent if half_extent > 0 else 1.0
    translation = -(lo + hi) / 2.0 * scale
    p = PointCloud.sample(pred.transformed(scale, translation), n, seed)
    q = PointCloud.sample(gt.transformed(scale, translation), n, seed)
    return chamfer_distance(p, q) * report_scale


def _canonical_direction(d: np.ndarray) -> np.ndarray:
    """Flip d so its first non-negligible component is positive; a line has no direction."""
    for c in d:
        if abs(c) > 1e-12:
            return d if c > 0 else -d
    return d


@dataclass(frozen=True)
class PrimitiveRecord:
    """One curve or extrusion in world frame.

    line: midpoint(3), direction(3), length
    arc: center(3), radius, span
    circle: center(3), radius, normal(3)
    extrusion: total distance, one-hot operation(4), sketch_scale
    """
    LENGTHS: ClassVar[Dict[str, Tuple[bool, ...]]] = {
        "line": (True, True, True, False, False, False, True),
        "arc": (True, True, True, True, False),
        "circle": (True, True, True, True, False, False, False),
        "extrusion": (True, False, False, False, False, False),
    }

    kind: str
    params: Tuple[float, ...]

    def __post_init__(self):
        if self.kind not in self.LENGTHS:
            raise ValueError(f"Unknown primitive kind: {self.kind}")
        if len(self.params) != len(self.LENGTHS[self.kind]):
            raise ValueError(f"{self.kind} needs {len(self.LENGTHS[self.kind])} parameters, got {len(self.params)}")
        if not all(math.isfinite(x) for x in self.params):
            raise ValueError(f"{self.kind} has non-finite parameters")

    def normalized(self, scale: float) -> np.ndarray:
        """Lengths divided by scale, angles by a full turn; directions and flags unchanged."""
        v = np.asarray(self.params, dtype=np.float64).copy()
        lengths = np.asarray(self.LENGTHS[self.kind])
        v[lengths] /= scale
        if self.kind == "arc":
            v[4] /= 2.0 * math.pi
        return v


def _curve_record(curve, part: Part) -> PrimitiveRecord:
    cs = part.coordinate_system
    s = part.extrusion.sketch_scale
    if isinstance(curve, Line):
        a, b = cs.to_world(np.array([curve.start, curve.end]) * s)
        d = b - a
        length = float(np.linalg.norm(d))
        direction = _canonical_direction(d / length) if length > 0 else d
        return PrimitiveRecord("line", tuple(float(x) for x in (*(a + b) / 2.0, *direction, length)))
    if isinstance(curve, Arc):
        center, radius = curve.circumcircle()
        c = cs.to_world(np.array([center]) * s)[0]
        return PrimitiveRecord("arc", tuple(float(x) for x in (*c, radius * s, curve.span())))
    if isinstance(curve, Circle):
        c = cs.to_world(np.array([curve.center]) * s)[0]
        return PrimitiveRecord("circle", tuple(float(x) for x in (*c, curve.radius * s, *cs.z_axis)))
    raise TypeError(f"Unknown curve type: {type(curve).__name__}")


def _extrusion_record(part: Part) -> PrimitiveRecord:
    ex = part.extrusion
    one_hot = [1.0 if ex.operation is op else 0.0 for op in Operation]
    return PrimitiveRecord("extrusion", (float(ex.extent), *one_hot, float(ex.sketch_scale)))


def extract_primitives(seq: CadSequence) -> List[PrimitiveRecord]:
    records = []
    for part in seq.parts:
        for profile in part.profiles:
            for loop in profile.loops:
                records.extend(_curve_record(curve, part) for curve in loop.curves)
        records.append(_extrusion_record(part))
    return records


def sequence_extent(*sequences: CadSequence) -> float:
    """Bounding-box diagonal of every curve's world-frame control points."""
    points = []
    for seq in sequences:
        for part in seq.parts:
            s = part.extrusion.sketch_scale
            for profile in part.profiles:
                for loop in profile.loops:
                    for curve in loop.curves:
                        points.append(part.coordinate_system.to_world(curve_control_points(curve) * s))
    if not points:
        return 1.0
    stacked = np.vstack(points)
    diagonal = float(np.linalg.norm(stacked.max(axis=0) - stacked.min(axis=0)))
    return diagonal if diagonal > 0 else 1.0


@dataclass(frozen=True)
class F1Result:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int

    @classmethod
    def from_counts(cls, tp: int, n_pred: int, n_gt: int) -> "F1Result":
        precision = tp / n_pred if n_pred else 0.0
        recall = tp / n_gt if n_gt else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        return cls(precision, recall, f1, tp, n_pred - tp, n_gt - tp)

    def to_dict(self) -> dict:
        return asdict(self)


def match_records(pred: List[PrimitiveRecord], gt: List[PrimitiveRecord], scale: float, tau: float) -> int:
    """Number of Hungarian-matched pairs whose normalised distance is within tau."""
    if not pred or not gt:
        return 0
    a = np.array([r.normalized(scale) for r in pred])
    b = np.array([r.normalized(scale) for r in gt])
    cost = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    return sum(1 for i, j in hungarian(cost) if cost[i, j] <= tau)


def f1_per_type(pred: CadSequence, gt: CadSequence, tau: float = F1_TAU) -> Dict[str, F1Result]:
    """Per-kind F1 for every kind present in either sequence."""
    scale = sequence_extent(pred, gt)
    pred_records = extract_primitives(pred)
    gt_records = extract_primitives(gt)
    results = {}
    for kind in PRIMITIVE_KINDS:
        p = [r for r in pred_records if r.kind == kind]
        g = [r for r in gt_records if r.kind == kind]
        if not p and not g:
            continue
        results[kind] = F1Result.from_counts(match_records(p, g, scale, tau), len(p), len(g))
    logger.debug(f"F1 per kind: { {k: round(v.f1, 4) for k, v in results.items()} }")
    return results
