"""Command-line entry point for CAD sequence evaluation."""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from config import ConfigError, EvalConfig, load_config
from models import IdUniverseMismatch, ManifestError

logger = logging.getLogger("cadmetrics")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2


class UsageError(Exception):
    pass


class CliParser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; usage errors exit with 1 here."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _print_json(data):
    print(json.dumps(data, indent=2))


def _read_text(path) -> str:
    return Path(path).read_text(encoding="utf-8")


def cmd_validate(args, config: EvalConfig) -> int:
    from cad.schema import CadSchemaError, Violation, load_sequence, validate

    try:
        violations = validate(load_sequence(_read_text(args.json)), config.tessellation())
    except CadSchemaError as e:
        violations = [Violation(e.path, type(e).__name__, e.message)]
    _print_json({"file": str(args.json), "valid": not violations, "violations": [v.to_dict() for v in violations]})
    return EXIT_OK


def cmd_build_mesh(args, config: EvalConfig) -> int:
    from cad.errors import KernelError
    from cad.kernel import build_model
    from cad.mesh_io import export_mesh
    from cad.schema import CadSchemaError, parse_sequence
    from metrics.topology import topology_report

    try:
        mesh = build_model(parse_sequence(_read_text(args.json)), config.tessellation())
    except (CadSchemaError, KernelError) as e:
        print(f"{args.json}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_USAGE
    export_mesh(mesh, args.output)
    _print_json(topology_report(mesh).to_dict())
    return EXIT_OK


def cmd_eval_pair(args, config: EvalConfig) -> int:
    from evaluate import evaluate_pair, resolve_source

    pred = resolve_source(str(args.pred))
    gt = resolve_source(str(args.gt))
    report = evaluate_pair(pred, gt, config, sample_id=Path(args.pred).stem)
    data = {"sample": report.to_dict(), "metadata": config.metadata()}
    if args.output:
        from storage import ReportStore
        ReportStore.save_json(args.output, data)
    _print_json(data)
    return EXIT_OK


def cmd_eval_dataset(args, config: EvalConfig) -> int:
    from evaluate import evaluate_dataset
    from storage import ReportStore

    entries, base_dir = ReportStore.load_manifest(args.manifest)
    run_id = args.run_id or Path(args.manifest).stem
    report, samples = evaluate_dataset(entries, config, jobs=args.jobs, run_id=run_id, base_dir=base_dir)
    ReportStore(args.output).save_run(report, samples)
    _print_json(report.to_dict())
    return EXIT_OK


def cmd_common_subset(args, config: EvalConfig) -> int:
    from evaluate import common_subset
    from storage import ReportStore, results_table

    runs = {}
    for run_dir in args.runs:
        run_id = Path(run_dir).name
        if run_id in runs:
            raise UsageError(f"run directories must have distinct names, {run_id!r} repeats")
        runs[run_id] = ReportStore.load_samples(run_dir)
    reports = common_subset(runs, config.metadata())

    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    ReportStore.save_json(out / "common_subset.json", {k: r.to_dict() for k, r in reports.items()})
    results_table(list(reports.values())).to_csv(out / "common_subset.csv")
    print(results_table(list(reports.values())).to_string())
    return EXIT_OK


def cmd_corpus_stats(args, config: EvalConfig) -> int:
    from corpus import corpus_summary, export_stats, load_corpus

    docs = load_corpus(args.jsonl)
    stats = corpus_summary(docs, seed=config.seed, checkpoint=config.vocab_checkpoint)
    paths = export_stats(stats, args.output, bins=config.histogram_bins)
    _print_json({k: str(v) for k, v in paths.items()})
    return EXIT_OK


def _read_jsonl(path) -> List[dict]:
    with open(path, "r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def cmd_annotate(args, config: EvalConfig) -> int:
    from concurrent.futures import ThreadPoolExecutor

    from annotators import get_client
    from annotators.client import EndpointError
    from annotators.prompts import build_annotation_request, build_generation_request

    records = _read_jsonl(args.manifest)
    base_dir = Path(args.manifest).parent
    requests_ = []
    for record in records:
        if args.generate:
            req = build_generation_request(record["description"], config.model, config.temperature, config.max_tokens)
        else:
            minimal_json = record["json"]
            if not minimal_json.lstrip().startswith("{"):
                minimal_json = _read_text(base_dir / minimal_json)
            images = [str(base_dir / p) for p in record.get("images", [])]
            req = build_annotation_request(minimal_json, images, config.model, config.temperature, config.max_tokens)
        requests_.append((str(record["id"]), req))

    client = get_client(config.endpoint, audit_path=Path(args.output).with_suffix(".audit.jsonl"))

    def run(item):
        sample_id, req = item
        try:
            return {"id": sample_id, "request_hash": req.digest(), "templates": req.templates, "text": client.call(req)}
        except EndpointError as e:
            logger.error(f"Sample {sample_id}: {type(e).__name__}: {e}")
            return {"id": sample_id, "request_hash": req.digest(), "templates": req.templates, "error": str(e)}

    with ThreadPoolExecutor(max_workers=config.max_in_flight) as pool:
        results = list(pool.map(run, requests_))
    with open(args.output, "w") as f:
        for row in results:
            f.write(json.dumps(row) + "\n")
    failed = sum("error" in r for r in results)
    logger.info(f"Annotated {len(results) - failed} of {len(results)} samples into {args.output}")
    return EXIT_OK


def cmd_judge(args, config: EvalConfig) -> int:
    from annotators import get_client
    from annotators.judge import JudgePair, aggregate_verdicts, build_tournament, run_tournament
    from annotators.prompts import template_hash

    pairs = [
        JudgePair(
            id=str(r["id"]),
            desc_a=r["desc_a"],
            desc_b=r["desc_b"],
            source_a=r["source_a"],
            source_b=r["source_b"],
            images=tuple(r.get("images", ())),
            evidence_json=r.get("evidence_json"),
        )
        for r in _read_jsonl(args.pairs)
    ]
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    tasks = build_tournament(pairs, args.criterion, seed=config.seed)
    with open(out / "assignments.jsonl", "w") as f:
        for task in tasks:
            f.write(json.dumps(task.to_dict()) + "\n")

    client = get_client(config.endpoint, audit_path=out / "audit.jsonl")
    verdicts, dropped = run_tournament(
        tasks, client.call, retries=config.judge_retries, max_in_flight=config.max_in_flight, model_id=config.judge_model
    )
    with open(out / "verdicts.jsonl", "w") as f:
        for verdict in verdicts:
            f.write(json.dumps(verdict.to_dict()) + "\n")
    summary = aggregate_verdicts(verdicts, args.criterion, dropped).to_dict()
    summary["template_hash"] = template_hash(f"judge_{args.criterion}")
    summary["metadata"] = config.metadata()
    from storage import ReportStore
    ReportStore.save_json(out / "summary.json", summary)
    _print_json(summary)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(
        prog="cadmetrics",
        description="Evaluate sketch-and-extrude CAD sequences.",
        epilog=(
            "DMCD radius policy: dmcd_normalization defaults to per_mesh (each mesh scaled to a unit "
            "bounding-box diagonal before the radius is applied); set it to ground_truth to scale both "
            "meshes by the ground-truth diagonal, or none for raw units."
        ),
    )
    parser.add_argument("--config", help="flat key = value TOML file overriding the defaults")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for dataset evaluation")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)

    p = sub.add_parser("validate", help="list schema and invariant violations")
    p.add_argument("json")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("build-mesh", help="build a sequence into an STL or OBJ mesh")
    p.add_argument("json")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_build_mesh)

    p = sub.add_parser("eval-pair", help="evaluate one prediction against one ground truth")
    p.add_argument("pred")
    p.add_argument("gt")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_eval_pair)

    p = sub.add_parser("eval-dataset", help="evaluate a JSON-lines manifest")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--run-id")
    p.set_defaults(func=cmd_eval_dataset)

    p = sub.add_parser("common-subset", help="recompute runs on the samples valid in all of them")
    p.add_argument("runs", nargs="+")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_common_subset)

    p = sub.add_parser("corpus-stats", help="word, digit and vocabulary statistics of annotations")
    p.add_argument("jsonl")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_corpus_stats)

    p = sub.add_parser("annotate", help="request descriptions (or sequences with --generate)")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--generate", action="store_true", help="description to sequence instead of sequence to description")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("judge", help="pairwise judging tournament for one criterion")
    p.add_argument("pairs")
    p.add_argument("--criterion", required=True,
                   choices=["human_likeness", "clarity", "visual_faithfulness", "completeness"])
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_judge)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    from annotators.client import AuthError
    from annotators.judge import JudgeError
    from annotators.prompts import PromptError
    from corpus import CorpusError

    try:
        if args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        config = load_config(args.config)
        return args.func(args, config)
    except (UsageError, ConfigError, AuthError, PromptError, JudgeError, IdUniverseMismatch) as e:
        logger.error(str(e))
        return EXIT_USAGE
    except (OSError, ManifestError, CorpusError, json.JSONDecodeError, KeyError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
