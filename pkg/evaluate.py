"""Per-sample evaluation pipeline and dataset aggregation."""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from config import EvalConfig
from cad.kernel import build_model
from cad.mesh import TriangleMesh
from cad.mesh_io import MESH_SUFFIXES, load_mesh
from cad.schema import CadSchemaError, parse_sequence
from cad.sequence import CadSequence
from metrics.intersection import self_intersection_ratio
from metrics.shape import dmcd, sphericity_discrepancy
from metrics.similarity import f1_per_type, normalized_chamfer
from metrics.topology import dangling_edge_length, eecm, flux_enclosure_error, is_watertight, segment_error
from models import DatasetReport, IdUniverseMismatch, ManifestEntry, SampleReport

logger = logging.getLogger(__name__)

Source = Union[str, TriangleMesh]


def resolve_source(value: str, base_dir: Optional[Path] = None) -> Source:
    """Inline JSON stays text; a path is read as JSON text or loaded as a mesh by suffix."""
    if value.lstrip().startswith("{"):
        return value
    path = Path(value)
    if base_dir is not None and not path.is_absolute():
        path = Path(base_dir) / path
    if path.suffix.lower() in MESH_SUFFIXES:
        return load_mesh(path)
    return path.read_text(encoding="utf-8")


def _stage_side(report: SampleReport, source: Source, side: str, config: EvalConfig) -> Tuple[Optional[CadSequence], Optional[TriangleMesh]]:
    """Parse and build one side; failures are recorded and end the side's pipeline."""
    if isinstance(source, TriangleMesh):
        setattr(report, f"parse_ok_{side}", True)
        if source.is_empty:
            report.errors.append(f"{side}: mesh: EmptyMesh: file holds no triangles")
            return None, None
        setattr(report, f"mesh_ok_{side}", True)
        return None, source

    try:
        seq = parse_sequence(source)
    except CadSchemaError as e:
        report.add_error(f"{side}: parse", e)
        return None, None
    setattr(report, f"parse_ok_{side}", True)

    try:
        mesh = build_model(seq, config.tessellation())
    except Exception as e:
        report.add_error(f"{side}: mesh", e)
        return seq, None
    setattr(report, f"mesh_ok_{side}", True)
    return seq, mesh


def _metric(report: SampleReport, name: str, fn, *args, **kwargs):
    try:
        setattr(report, name, fn(*args, **kwargs))
    except Exception as e:
        report.add_error(name, e)


def evaluate_pair(pred: Source, gt: Source, config: EvalConfig = None, sample_id: str = "pair") -> SampleReport:
    """parse -> build -> metrics; nothing raises, every failure lands in the report."""
    config = config or EvalConfig()
    report = SampleReport(id=sample_id)

    pred_seq, pred_mesh = _stage_side(report, pred, "pred", config)
    gt_seq, gt_mesh = _stage_side(report, gt, "gt", config)
    if pred_mesh is None:
        return report

    report.watertight_pred = is_watertight(pred_mesh)
    _metric(report, "sir", self_intersection_ratio, pred_mesh)
    _metric(report, "dangel", dangling_edge_length, pred_mesh)
    _metric(report, "fluxee", flux_enclosure_error, pred_mesh)
    if gt_mesh is None:
        return report

    report.watertight_gt = is_watertight(gt_mesh)
    _metric(report, "cd", normalized_chamfer, pred_mesh, gt_mesh, config.cd_sample_count, config.seed, config.cd_report_scale)
    _metric(report, "sege", segment_error, pred_mesh, gt_mesh, config.sege_scale)

    if pred_seq is not None and gt_seq is not None:
        try:
            for kind, result in f1_per_type(pred_seq, gt_seq, config.f1_tau).items():
                setattr(report, f"f1_{kind}", result.f1)
        except Exception as e:
            report.add_error("f1", e)

    if report.both_watertight:
        _metric(report, "eecm", eecm, pred_mesh, gt_mesh)
        _metric(
            report, "dmcd", dmcd, pred_mesh, gt_mesh,
            config.dmcd_radius, config.dmcd_normalization, config.curvature_weighting,
        )
        _metric(report, "sd", sphericity_discrepancy, pred_mesh, gt_mesh)
    return report


def evaluate_entry(entry: ManifestEntry, config: EvalConfig = None, base_dir: Optional[Path] = None) -> SampleReport:
    """Load both sides of a manifest entry and evaluate them; I/O failures count as parse failures."""
    config = config or EvalConfig()
    sources = {}
    errors = []
    for side, value in (("pred", entry.prediction), ("gt", entry.ground_truth)):
        try:
            sources[side] = resolve_source(value, base_dir)
        except Exception as e:
            errors.append(f"{side}: load: {type(e).__name__}: {e}")
            # an empty string fails parsing and keeps the stage flags consistent
            sources[side] = ""

    try:
        report = evaluate_pair(sources["pred"], sources["gt"], config, entry.id)
    except Exception as e:
        logger.error(f"Sample {entry.id} crashed: {e}")
        report = SampleReport(id=entry.id)
        report.add_error("evaluate", e)
    report.errors = errors + report.errors
    return report


def evaluate_dataset(
    entries: Sequence[ManifestEntry],
    config: EvalConfig = None,
    jobs: int = 1,
    run_id: str = "run",
    base_dir: Optional[Path] = None,
) -> Tuple[DatasetReport, List[SampleReport]]:
    """Evaluate every entry (in parallel when jobs > 1) and aggregate in id order."""
    from scheduler import EvaluationScheduler

    config = config or EvalConfig()
    samples = EvaluationScheduler(jobs=jobs).run(entries, config, base_dir)
    report = DatasetReport.from_samples(run_id, samples, config.metadata())
    logger.info(
        f"Run {run_id}: {report.sample_count} samples, {report.num_valid} valid, "
        f"IR {report.ir_percent if report.ir_percent is not None else float('nan'):.1f}%"
    )
    return report, samples


def common_subset(runs: Dict[str, List[SampleReport]], metadata: dict = None) -> Dict[str, DatasetReport]:
    """Recompute every run on the ids valid (and, for gated metrics, watertight) in all runs."""
    if not runs:
        return {}
    universes = {run_id: {s.id for s in samples} for run_id, samples in runs.items()}
    reference_id, reference = next(iter(universes.items()))
    for run_id, ids in universes.items():
        if ids != reference:
            missing = sorted(reference ^ ids)[:5]
            raise IdUniverseMismatch(f"runs {reference_id} and {run_id} cover different ids, e.g. {missing}")

    valid_ids = set(reference)
    watertight_ids = set(reference)
    for samples in runs.values():
        valid_ids &= {s.id for s in samples if s.is_valid}
        watertight_ids &= {s.id for s in samples if s.is_valid and s.both_watertight}
    logger.info(f"Common subset: {len(valid_ids)} valid, {len(watertight_ids)} watertight of {len(reference)}")

    return {
        run_id: DatasetReport.from_samples(
            run_id, samples, metadata, valid_ids=valid_ids, watertight_ids=watertight_ids, subset="common"
        )
        for run_id, samples in runs.items()
    }
