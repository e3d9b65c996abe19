"""Worker pool for per-sample evaluation jobs."""
import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from functools import partial
from pathlib import Path
from typing import List, Optional, Sequence

from config import EvalConfig
from evaluate import evaluate_entry
from models import ManifestEntry, SampleReport

logger = logging.getLogger(__name__)


class EvaluationScheduler:
    """Runs one job per manifest entry; each worker owns its sample end to end."""

    def __init__(self, jobs: int = 1):
        if jobs < 1:
            raise ValueError(f"jobs must be >= 1, got {jobs}")
        self.jobs = jobs

    def _finish(self, report: SampleReport, done: int, total: int):
        if report.errors:
            logger.warning(f"Sample {report.id}: {report.errors[0]}")
        logger.debug(f"[{done}/{total}] {report.id} done")

    def run(
        self,
        entries: Sequence[ManifestEntry],
        config: EvalConfig = None,
        base_dir: Optional[Path] = None,
    ) -> List[SampleReport]:
        """Evaluate all entries; results come back sorted by id whatever the completion order."""
        config = config or EvalConfig()
        total = len(entries)
        logger.info(f"Evaluating {total} samples with {self.jobs} worker(s)")
        job = partial(evaluate_entry, config=config, base_dir=base_dir)

        results = []
        if self.jobs == 1 or total <= 1:
            for done, entry in enumerate(entries, start=1):
                report = job(entry)
                results.append(report)
                self._finish(report, done, total)
        else:
            with ProcessPoolExecutor(max_workers=self.jobs) as pool:
                futures = {pool.submit(job, entry): entry for entry in entries}
                for done, future in enumerate(as_completed(futures), start=1):
                    entry = futures[future]
                    try:
                        report = future.result()
                    except Exception as e:
                        logger.error(f"Worker for sample {entry.id} failed: {e}")
                        report = SampleReport(id=entry.id)
                        report.add_error("worker", e)
                    results.append(report)
                    self._finish(report, done, total)

        results.sort(key=lambda r: r.id)
        logger.info("Evaluation job completed")
        return results
