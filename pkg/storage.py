"""File storage for manifests, per-sample results and aggregate reports."""
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd

from models import DatasetReport, ManifestEntry, ManifestError, SampleReport

logger = logging.getLogger(__name__)

SAMPLES_FILE = "samples.jsonl"
REPORT_FILE = "report.json"
TABLE_FILE = "table.csv"

# (row label, metric key, statistic, display scale)
TABLE_ROWS = [
    ("IR (%)", "ir_percent", None, 1.0),
    ("Num Valid", "num_valid", None, 1.0),
    ("Line F1", "f1_line", "mean", 1.0),
    ("Arc F1", "f1_arc", "mean", 1.0),
    ("Circle F1", "f1_circle", "mean", 1.0),
    ("Extrusion F1", "f1_extrusion", "mean", 1.0),
    ("CD median", "cd", "median", 1.0),
    ("SIR", "sir", "mean", 1.0),
    ("DangEL", "dangel", "mean", 1.0),
    ("SegE", "sege", "mean", 1.0),
    ("FluxEE (x1e2)", "fluxee", "mean", 1e2),
    ("Watertightness (%)", "watertight_percent", None, 1.0),
    ("Num Watertight", "num_watertight", None, 1.0),
    ("EECM", "eecm", "mean", 1.0),
    ("DMCD (x1e3)", "dmcd", "mean", 1e3),
    ("SD mean (x1e2)", "sd", "mean", 1e2),
    ("SD median (x1e2)", "sd", "median", 1e2),
]


class ReportStore:
    """Reads manifests and writes one directory per evaluation run."""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)

    @staticmethod
    def load_manifest(path) -> Tuple[List[ManifestEntry], Path]:
        """JSON-lines manifest; returns the entries and the directory relative paths resolve against."""
        path = Path(path)
        entries = []
        seen = set()
        with open(path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as e:
                    raise ManifestError(f"{path}:{lineno}: {e.msg}") from e
                if not isinstance(record, dict):
                    raise ManifestError(f"{path}:{lineno}: expected an object")
                missing = [k for k in ("id", "prediction", "ground_truth") if k not in record]
                if missing:
                    raise ManifestError(f"{path}:{lineno}: missing {', '.join(missing)}")
                entry_id = str(record["id"])
                if entry_id in seen:
                    raise ManifestError(f"{path}:{lineno}: duplicate id {entry_id!r}")
                seen.add(entry_id)
                entries.append(ManifestEntry(
                    id=entry_id,
                    prediction=_inline(record["prediction"]),
                    ground_truth=_inline(record["ground_truth"]),
                    description=record.get("description"),
                ))
        logger.info(f"Loaded {len(entries)} manifest entries from {path}")
        return entries, path.parent

    def save_run(self, report: DatasetReport, samples: Sequence[SampleReport]) -> Dict[str, Path]:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        paths = {
            "samples": self.out_dir / SAMPLES_FILE,
            "report": self.out_dir / REPORT_FILE,
            "table": self.out_dir / TABLE_FILE,
        }
        with open(paths["samples"], "w") as f:
            for sample in sorted(samples, key=lambda s: s.id):
                f.write(json.dumps(sample.to_dict()) + "\n")
        self.save_json(paths["report"], report.to_dict())
        results_table([report]).to_csv(paths["table"])
        logger.info(f"Wrote run {report.run_id} to {self.out_dir}")
        return paths

    @staticmethod
    def save_json(path, data: dict):
        with open(path, "w") as f:
            json.dump(data, f, indent=2)
            f.write("\n")

    @staticmethod
    def load_samples(run_dir) -> List[SampleReport]:
        samples = []
        with open(Path(run_dir) / SAMPLES_FILE, "r") as f:
            for line in f:
                if line.strip():
                    samples.append(SampleReport.from_dict(json.loads(line)))
        return samples

    @staticmethod
    def load_report(run_dir) -> DatasetReport:
        with open(Path(run_dir) / REPORT_FILE, "r") as f:
            return DatasetReport.from_dict(json.load(f))


def _inline(value) -> str:
    """Inline sequences may be given as JSON objects; store them as text."""
    if isinstance(value, dict):
        return json.dumps(value)
    if isinstance(value, str):
        return value
    raise ManifestError(f"expected a path or a JSON object, got {type(value).__name__}")


def _table_value(report: DatasetReport, key: str, stat: Optional[str], scale: float) -> Tuple[Optional[float], Optional[float]]:
    if stat is None:
        value = getattr(report, key)
        return (value * scale if value is not None else None), None
    agg = report.metrics[key]
    value = getattr(agg, stat)
    std = agg.std if stat == "mean" else None
    return (
        value * scale if value is not None else None,
        std * scale if std is not None else None,
    )


def results_table(reports: Sequence[DatasetReport]) -> pd.DataFrame:
    """Rows in the usual table order, one value and one std column per run."""
    data = {}
    for report in reports:
        values, stds = [], []
        for _, key, stat, scale in TABLE_ROWS:
            value, std = _table_value(report, key, stat, scale)
            values.append(value)
            stds.append(std)
        data[report.run_id] = values
        data[f"{report.run_id} std"] = stds
    return pd.DataFrame(data, index=pd.Index([label for label, *_ in TABLE_ROWS], name="metric"))
