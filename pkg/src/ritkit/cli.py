"""Command-line entry point: detect, mutate, adjudicate and eval workflows.

Exit codes for detect: 0 clean, 1 findings present, 2 fatal error. Reports go
to stdout (or --out), diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .client import StubAdjudicator
from .config import ConfigError, ToolConfig, load_config
from .detector import DetectorConfig, FineCategory, detect_file
from .evaluate import (
    EXPERIMENT_CELLS,
    ExperimentConfig,
    GroundTruthEntry,
    constant_predictor,
    detector_predictor,
    echo_predictor,
    ground_truth_from_manifest,
    load_ground_truth,
    load_logs,
    metrics_from_logs,
    render_metrics_table,
    run_experiment,
    save_logs,
)
from .hybrid import audit_log_lines, run_pipeline
from .mutate import (
    Exhaustive,
    MutantManifest,
    MutationError,
    OPERATOR_ORDER,
    Sample,
    Seed,
    bundled_seed_paths,
    generate_corpus,
)
from .parser import parse_ruleset
from .report import (
    parse_structured,
    render_structured,
    render_structured_lines,
    render_text,
    report_to_json,
)
from .source import SourceFile

EXIT_CLEAN = 0
EXIT_FINDINGS = 1
EXIT_FATAL = 2


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_FATAL


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_tool_config(path: str | None) -> ToolConfig:
    return load_config(path) if path else ToolConfig()


def _collect_rules_files(paths: list[str]) -> list[Path]:
    files: list[Path] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            files.extend(sorted(p.rglob("*.rules")))
        elif p.exists():
            files.append(p)
        else:
            raise FileNotFoundError(raw)
    return files


# ---------------------------------------------------------------------------
# detect


def cmd_detect(args: argparse.Namespace) -> int:
    try:
        config = _load_tool_config(args.config)
    except ConfigError as exc:
        return _fail(str(exc))
    strict = not args.lenient_matching and config.strict_event_matching
    detector_config = DetectorConfig(strict_event_matching=strict)
    try:
        files = _collect_rules_files(args.paths)
    except FileNotFoundError as exc:
        return _fail(f"no such file or directory: {exc}")
    if not files:
        return _fail("no .rules files found")

    reports = []
    for path in files:
        try:
            source = SourceFile.from_path(path)
        except (OSError, UnicodeDecodeError) as exc:
            return _fail(f"cannot read {path}: {exc}")
        ruleset = parse_ruleset(source)
        for diag in ruleset.diagnostics:
            print(f"{path}:{diag.loc.start_line}:{diag.loc.start_col}: {diag.severity}: {diag.message}", file=sys.stderr)
        reports.append(detect_file(ruleset, detector_config))

    fmt = args.format or config.format
    if fmt == "text":
        body = "\n".join(render_text(r) for r in reports)
    elif len(reports) == 1:
        body = render_structured(reports[0])
    else:
        body = render_structured_lines(reports)
    _emit(body, args.out)
    return EXIT_FINDINGS if any(r.total for r in reports) else EXIT_CLEAN


# ---------------------------------------------------------------------------
# mutate


def cmd_mutate(args: argparse.Namespace) -> int:
    if args.strategy == "sample":
        if args.sample_n is None or args.rng_seed is None:
            return _fail("--strategy sample requires --sample-n and --rng-seed")
        strategy = Sample(args.sample_n, args.rng_seed)
    else:
        strategy = Exhaustive()
    try:
        operators = tuple(FineCategory(name) for name in args.operators.split(",")) if args.operators else OPERATOR_ORDER
    except ValueError as exc:
        return _fail(f"unknown operator: {exc}")

    seed_paths = args.seeds or [str(p) for p in bundled_seed_paths()]
    try:
        seeds = []
        for raw in seed_paths:
            p = Path(raw)
            if p.is_dir():
                seeds.extend(Seed.load(f) for f in sorted(p.rglob("*.rules")))
            else:
                seeds.append(Seed.load(p))
        manifest = generate_corpus(
            seeds,
            strategy,
            args.out_dir,
            operators=operators,
            post_update_cascades=args.post_update_cascades,
        )
    except (MutationError, OSError) as exc:
        return _fail(str(exc))
    totals = manifest.totals()
    print(f"wrote {len(manifest.records)} mutants to {args.out_dir}", file=sys.stderr)
    print(json.dumps({"totals": totals, "manifest": str(Path(args.out_dir) / 'manifest.jsonl')}))
    return EXIT_CLEAN


# ---------------------------------------------------------------------------
# adjudicate


def _make_adjudicator(args: argparse.Namespace, config: ToolConfig):
    if args.stub:
        if args.stub in ("accept-all", "reject-all"):
            return StubAdjudicator(args.stub)
        if args.stub.startswith("table:"):
            table_path = args.stub.split(":", 1)[1]
            table = json.loads(Path(table_path).read_text(encoding="utf-8"))
            return StubAdjudicator("table", table=table)
        raise ConfigError(f"unknown stub policy: {args.stub}")
    if config.backend is None:
        raise ConfigError("no backend configured; pass --stub or a config with a backend")
    from .client import HttpBackend
    from .hybrid import ModelAdjudicator

    return ModelAdjudicator(HttpBackend(config.backend))


def cmd_adjudicate(args: argparse.Namespace) -> int:
    try:
        config = _load_tool_config(args.config)
        adjudicator = _make_adjudicator(args, config)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        return _fail(str(exc))
    try:
        report = parse_structured(Path(args.report).read_text(encoding="utf-8"))
    except (OSError, ValueError, KeyError) as exc:
        return _fail(f"cannot load report {args.report}: {exc}")

    routed = frozenset(FineCategory(name) for name in (args.routed.split(",") if args.routed else config.routed_set))
    result = run_pipeline(report, adjudicator, routed)

    if args.audit_log:
        Path(args.audit_log).write_text(audit_log_lines(result.audit), encoding="utf-8")
    for ref in result.fail_open_refs:
        print(f"warning: adjudicator unavailable, fail-open kept finding {ref}", file=sys.stderr)

    fmt = args.format or config.format
    if fmt == "text":
        body = render_text(result.final)
    else:
        doc = report_to_json(result.final)
        doc["discarded"] = [report_to_json_finding(f) for f in result.discarded]
        doc["fail_open"] = list(result.fail_open_refs)
        body = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    _emit(body, args.out)
    return EXIT_CLEAN


def report_to_json_finding(finding):
    from .report import finding_to_json

    return finding_to_json(finding)


# ---------------------------------------------------------------------------
# eval


def _predictor_from_spec(
    spec: str,
    dataset: list[GroundTruthEntry],
    config: ExperimentConfig,
    strict: bool,
    tool_config: ToolConfig,
):
    if spec == "echo":
        return echo_predictor(dataset, config.taxonomy)
    if spec.startswith("constant:"):
        return constant_predictor(spec.split(":", 1)[1])
    if spec == "detector":
        return detector_predictor(config.taxonomy, strict)
    if spec == "backend":
        if tool_config.backend is None:
            raise ConfigError("--predictor backend needs a config file with a backend section")
        from .client import HttpBackend
        from .evaluate import backend_predictor
        from .prompts import PromptTemplate

        template = PromptTemplate(config.shots, config.taxonomy, config.multi_response)
        return backend_predictor(template, HttpBackend(tool_config.backend), config.multi_response)
    raise ConfigError(f"unknown predictor: {spec}")


def _predictions_from_file(path: str) -> dict[str, tuple[str, ...]]:
    out: dict[str, tuple[str, ...]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            out[obj["instance_id"]] = tuple(obj["labels"])
    return out


def cmd_eval(args: argparse.Namespace) -> int:
    if args.experiment:
        config = EXPERIMENT_CELLS[args.experiment]
        config = ExperimentConfig(config.taxonomy, config.multi_response, args.shots)
    else:
        config = ExperimentConfig(args.taxonomy, args.scoring == "multi", args.shots)

    if args.replay:
        try:
            logs = load_logs(args.replay)
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            return _fail(f"cannot load replay log {args.replay}: {exc}")
        row = metrics_from_logs(logs)
        print(render_metrics_table(row, config.labels, name="replay"))
        return EXIT_CLEAN

    try:
        try:
            dataset = load_ground_truth(args.manifest)
        except KeyError:
            # Mutation manifests convert directly to ground truth.
            dataset = ground_truth_from_manifest(MutantManifest.load(args.manifest))
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        return _fail(f"cannot load manifest {args.manifest}: {exc}")
    if not dataset:
        return _fail("manifest is empty")

    if args.predictions:
        try:
            predictions = _predictions_from_file(args.predictions)
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            return _fail(f"cannot load predictions {args.predictions}: {exc}")
        dataset_ids = {e.instance_id for e in dataset}
        orphans = sorted(set(predictions) ^ dataset_ids)
        if orphans:
            print("error: manifest/prediction id mismatch:", file=sys.stderr)
            for orphan in orphans:
                print(f"  {orphan}", file=sys.stderr)
            return EXIT_FATAL
        predictor = lambda entry: predictions[entry.instance_id]  # noqa: E731
    else:
        try:
            tool_config = _load_tool_config(args.config)
            predictor = _predictor_from_spec(
                args.predictor, dataset, config, strict=not args.lenient_matching, tool_config=tool_config
            )
        except ConfigError as exc:
            return _fail(str(exc))

    row, logs = run_experiment(config, dataset, predictor)
    if args.per_instance_log:
        save_logs(logs, args.per_instance_log)
    print(render_metrics_table(row, config.labels, name=args.predictor or "predictions"))
    return EXIT_CLEAN


# ---------------------------------------------------------------------------


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ritkit", description="Rule interaction threat toolkit")
    parser.add_argument("--version", action="version", version=f"ritkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="analyze .rules files and report threats")
    p.add_argument("paths", nargs="+", help=".rules files or directories (recursed)")
    p.add_argument("--format", choices=("text", "structured"), default=None, help="report format")
    p.add_argument("--out", help="write the report to a file instead of stdout")
    p.add_argument("--lenient-matching", action="store_true", help="let postUpdate fire received-command triggers")
    p.add_argument("--config", help="path to a JSON tool config")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("mutate", help="generate a mutation corpus from benign seeds")
    p.add_argument("seeds", nargs="*", help="seed .rules files or directories (default: bundled seeds)")
    p.add_argument("--out-dir", required=True, help="directory for mutant files and manifest.jsonl")
    p.add_argument("--operators", help="comma-separated operator subset (default: all six)")
    p.add_argument("--strategy", choices=("exhaustive", "sample"), default="exhaustive", help="pair selection strategy")
    p.add_argument("--sample-n", type=int, help="number of mutants for --strategy sample")
    p.add_argument("--rng-seed", type=int, help="explicit RNG seed for --strategy sample")
    p.add_argument(
        "--post-update-cascades",
        action="store_true",
        help="emit postUpdate cascade variants (missed under strict matching)",
    )
    p.set_defaults(func=cmd_mutate)

    p = sub.add_parser("adjudicate", help="reconcile a structured detector report")
    p.add_argument("report", help="structured report produced by `detect --format structured`")
    p.add_argument("--stub", help="offline adjudicator: accept-all | reject-all | table:<json-path>")
    p.add_argument("--routed", help="comma-separated categories to adjudicate (default WAC,WTC)")
    p.add_argument("--audit-log", help="write per-subtask audit records (JSONL) here")
    p.add_argument("--format", choices=("text", "structured"), default=None, help="final report format")
    p.add_argument("--out", help="write the final report to a file instead of stdout")
    p.add_argument("--config", help="path to a JSON tool config (backend settings live here)")
    p.set_defaults(func=cmd_adjudicate)

    p = sub.add_parser("eval", help="score predictions against a ground-truth manifest")
    p.add_argument("--manifest", help="ground-truth JSONL (mutation manifest.jsonl converts directly)")
    p.add_argument("--predictions", help="JSONL of {instance_id, labels} predictions")
    p.add_argument("--predictor", help="predictor: echo | detector | constant:<LABEL> | backend")
    p.add_argument("--replay", help="recompute metrics from a per-instance log")
    p.add_argument("--experiment", choices=tuple(EXPERIMENT_CELLS), help="preset cell: A/B six-class, C/D three-class")
    p.add_argument("--taxonomy", choices=("six", "three"), default="six", help="label granularity")
    p.add_argument("--scoring", choices=("multi", "single"), default="multi", help="multiple responses allowed or not")
    p.add_argument("--shots", type=int, choices=(0, 1, 2), default=0, help="examples per category in prompts")
    p.add_argument("--lenient-matching", action="store_true", help="detector predictor uses lenient event matching")
    p.add_argument("--per-instance-log", help="write the replayable per-instance log here")
    p.add_argument("--config", help="path to a JSON tool config (backend predictor settings)")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_arg_parser()
    args = parser.parse_args(argv)
    if args.command == "eval" and not (args.replay or args.manifest):
        parser.error("eval requires --manifest (or --replay)")
    if args.command == "eval" and not (args.replay or args.predictions or args.predictor):
        parser.error("eval requires --predictions, --predictor or --replay")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
