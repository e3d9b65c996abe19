"""Data models for evaluation runs."""
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, Iterable, List, Optional, Set

import pandas as pd

# Metrics that need both meshes watertight
GATED_METRICS = ("eecm", "dmcd", "sd")
METRIC_KEYS = (
    "f1_line", "f1_arc", "f1_circle", "f1_extrusion",
    "cd", "sir", "dangel", "sege", "fluxee",
    "eecm", "dmcd", "sd",
)


class ManifestError(ValueError):
    pass


class IdUniverseMismatch(ValueError):
    pass


@dataclass(frozen=True)
class ManifestEntry:
    """prediction / ground_truth hold inline CAD JSON text or a file path (.json, .stl, .obj)."""
    id: str
    prediction: str
    ground_truth: str
    description: Optional[str] = None


@dataclass
class SampleReport:
    """Outcome of one prediction / ground-truth pair; a metric is None when its prerequisites failed."""
    id: str
    parse_ok_pred: bool = False
    parse_ok_gt: bool = False
    mesh_ok_pred: bool = False
    mesh_ok_gt: bool = False
    watertight_pred: bool = False
    watertight_gt: bool = False
    f1_line: Optional[float] = None
    f1_arc: Optional[float] = None
    f1_circle: Optional[float] = None
    f1_extrusion: Optional[float] = None
    cd: Optional[float] = None
    sir: Optional[float] = None
    dangel: Optional[float] = None
    sege: Optional[float] = None
    fluxee: Optional[float] = None
    eecm: Optional[int] = None
    dmcd: Optional[float] = None
    sd: Optional[float] = None
    errors: List[str] = field(default_factory=list)

    @property
    def is_valid(self) -> bool:
        """The prediction parsed and built into a mesh."""
        return self.parse_ok_pred and self.mesh_ok_pred

    @property
    def both_watertight(self) -> bool:
        return self.watertight_pred and self.watertight_gt

    def add_error(self, stage: str, error: Exception):
        self.errors.append(f"{stage}: {type(error).__name__}: {error}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SampleReport":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})


@dataclass
class MetricAggregate:
    count: int
    mean: Optional[float] = None
    std: Optional[float] = None
    median: Optional[float] = None

    @classmethod
    def from_values(cls, values: List[float]) -> "MetricAggregate":
        if not values:
            return cls(0)
        series = pd.Series(values, dtype="float64")
        std = float(series.std(ddof=1)) if len(series) > 1 else None
        return cls(len(series), float(series.mean()), std, float(series.median()))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class DatasetReport:
    """Aggregates over each metric's own valid subset; reproducible from the sample reports."""
    run_id: str
    sample_count: int
    num_valid: int
    ir_percent: Optional[float]
    num_watertight: int
    watertight_percent: Optional[float]
    metrics: Dict[str, MetricAggregate]
    metadata: dict = field(default_factory=dict)
    subset: str = "own"

    @property
    def cd_median(self) -> Optional[float]:
        return self.metrics["cd"].median

    @classmethod
    def from_samples(
        cls,
        run_id: str,
        samples: Iterable[SampleReport],
        metadata: dict = None,
        valid_ids: Optional[Set[str]] = None,
        watertight_ids: Optional[Set[str]] = None,
        subset: str = "own",
    ) -> "DatasetReport":
        """Aggregate samples sorted by id.

        valid_ids / watertight_ids restrict the ungated and gated metrics to a
        given id set (common-subset recomputation); by default each sample's own
        validity decides.
        """
        samples = sorted(samples, key=lambda s: s.id)
        n = len(samples)
        if valid_ids is None:
            valid = [s for s in samples if s.is_valid]
        else:
            valid = [s for s in samples if s.id in valid_ids]
        if watertight_ids is None:
            gated = [s for s in valid if s.both_watertight]
        else:
            gated = [s for s in valid if s.id in watertight_ids]

        metrics = {}
        for key in METRIC_KEYS:
            pool = gated if key in GATED_METRICS else valid
            values = [getattr(s, key) for s in pool if getattr(s, key) is not None]
            metrics[key] = MetricAggregate.from_values([float(v) for v in values])

        watertight_pred = sum(s.watertight_pred for s in valid)
        return cls(
            run_id=run_id,
            sample_count=n,
            num_valid=len(valid),
            ir_percent=100.0 * (n - len(valid)) / n if n else None,
            num_watertight=len(gated),
            watertight_percent=100.0 * watertight_pred / len(valid) if valid else None,
            metrics=metrics,
            metadata=dict(metadata or {}),
            subset=subset,
        )

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "subset": self.subset,
            "sample_count": self.sample_count,
            "num_valid": self.num_valid,
            "ir_percent": self.ir_percent,
            "num_watertight": self.num_watertight,
            "watertight_percent": self.watertight_percent,
            "cd_median": self.cd_median,
            "metrics": {k: v.to_dict() for k, v in self.metrics.items()},
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DatasetReport":
        return cls(
            run_id=data["run_id"],
            sample_count=data["sample_count"],
            num_valid=data["num_valid"],
            ir_percent=data["ir_percent"],
            num_watertight=data["num_watertight"],
            watertight_percent=data["watertight_percent"],
            metrics={k: MetricAggregate(**v) for k, v in data["metrics"].items()},
            metadata=data.get("metadata", {}),
            subset=data.get("subset", "own"),
        )
