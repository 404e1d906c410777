"""Command-line entry point.

Subcommands mirror the module boundaries:
    validate      check a dataset manifest
    index build   build a per-country retrieval index from a metadata snapshot
    run           execute pipelines over a manifest (batch)
    metrics       score a batch output tree into metrics.csv
    eval serve    start the rating service over a batch output tree
    eval report   aggregate a ratings store into report.json + plots

Every command prints a machine-readable JSON summary as its final stdout
line and exits non-zero on failure. No command mutates its inputs; outputs
go under the directory the caller names. All randomness derives from --seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .backends import build_backends, load_backend_config
from .countries import all_countries, country
from .errors import TranscreateError
from .pipelines import PIPELINE_IDS, run_batch
from .pipelines.batch import plan_jobs


def _emit(summary: dict) -> None:
    print(json.dumps(summary, sort_keys=True))


def _fail(command: str, exc: Exception) -> int:
    print(f"error [{command}]: {type(exc).__name__}: {exc}", file=sys.stderr)
    _emit({"command": command, "status": "error", "error": f"{type(exc).__name__}: {exc}"})
    return 1


def _parse_countries(raw: str | None):
    if not raw or raw == "all":
        return list(all_countries())
    return [country(token) for token in raw.split(",") if token.strip()]


def _parse_pipelines(raw: str | None) -> list[str]:
    if not raw or raw == "all":
        return list(PIPELINE_IDS)
    pipelines = [token.strip() for token in raw.split(",") if token.strip()]
    for pid in pipelines:
        if pid not in PIPELINE_IDS:
            raise ValueError(f"unknown pipeline {pid!r}; choose from {', '.join(PIPELINE_IDS)}")
    return pipelines


def cmd_validate(args: argparse.Namespace) -> int:
    from .datasets import validate_manifest

    report = validate_manifest(args.manifest)
    for violation in report.violations:
        print(f"line {violation.line} [{violation.field}]: {violation.message}", file=sys.stderr)
    _emit({
        "command": "validate",
        "status": "ok" if report.clean else "violations",
        "manifest": report.manifest,
        "kind": report.kind,
        "entries": report.entries_seen,
        "violations": len(report.violations),
    })
    return 0 if report.clean else 1


def cmd_index_build(args: argparse.Namespace) -> int:
    from .imaging import text_digest
    from .retrieval import build_index, read_snapshot, save_index

    target = country(args.country)
    config = load_backend_config(args.config)
    backends = build_backends(config, seed=args.seed)

    def embed_record(rec):
        # Metadata snapshots carry no pixels, so records lacking a stored
        # embedding are embedded from their caption (or URL as a last resort).
        return backends.joint_text_embedder.run(rec.caption or rec.url)

    snapshot_digest = text_digest(Path(args.snapshot).read_bytes().decode("utf-8", "replace"))
    index, stats = build_index(
        read_snapshot(args.snapshot),
        target,
        embed_record,
        strict_substring=args.strict_substring_tld,
        source_snapshot=snapshot_digest,
    )
    out = save_index(index, args.out)
    _emit({
        "command": "index build",
        "status": "ok",
        "country": target.iso_code,
        "out": str(out),
        "entries": len(index),
        "scanned": stats.scanned,
        "deduplicated": stats.deduplicated,
        "embed_failures": stats.embed_failures,
    })
    return 0


def _load_indices(indices_dir: str | None, countries) -> dict:
    from .retrieval import load_index

    if indices_dir is None:
        return {}
    indices = {}
    root = Path(indices_dir)
    for c in countries:
        candidate = root / c.iso_code
        if (candidate / "index.meta.json").is_file():
            indices[c.iso_code] = load_index(candidate)
    return indices


def cmd_run(args: argparse.Namespace) -> int:
    from .datasets import load_dataset

    dataset = load_dataset(args.manifest)
    pipelines = _parse_pipelines(args.pipelines)
    countries = _parse_countries(args.countries)
    config = load_backend_config(args.config)

    if args.dry_run:
        jobs, skipped = plan_jobs(dataset, pipelines, countries, skip_same_country=args.skip_same_country)
        plan: dict[str, int] = {}
        for job in jobs:
            key = f"{job.pipeline_id}/{job.target.iso_code}"
            plan[key] = plan.get(key, 0) + 1
        for key in sorted(plan):
            print(f"{key}: {plan[key]} jobs")
        _emit({
            "command": "run",
            "status": "dry-run",
            "jobs": len(jobs),
            "skipped": len(skipped),
            "plan": plan,
        })
        return 0

    backends = build_backends(config, seed=args.seed)
    indices = _load_indices(args.indices, countries)
    if "cap-retrieve" in pipelines:
        missing = [c.iso_code for c in countries if c.iso_code not in indices]
        if missing:
            raise TranscreateError(
                "cap-retrieve requested but no index found for: " + ", ".join(missing)
                + " (pass --indices pointing at per-country index directories)"
            )
    report = run_batch(
        dataset, pipelines, countries, args.out, backends,
        indices=indices,
        registry=config.prompts,
        workers=args.workers,
        skip_same_country=args.skip_same_country,
    )
    _emit({
        "command": "run",
        "status": "ok",
        "out": str(args.out),
        "total": report.total,
        "completed": len(report.completed),
        "reused": len(report.reused),
        "failed": len(report.failed),
        "skipped": len(report.skipped),
    })
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    from .metrics import (
        MetricResult,
        country_relevance,
        filter_unedited,
        image_similarity,
        load_thresholds,
        relevance_delta,
        write_metrics_csv,
    )

    config = load_backend_config(args.config)
    backends = build_backends(config, seed=args.seed)
    results_root = Path(args.results)
    rows: list[MetricResult] = []
    for trace_path in sorted(results_root.glob("*/*/*.trace.json")):
        doc = json.loads(trace_path.read_text(encoding="utf-8"))
        if doc.get("status") != "ok":
            continue
        result_png = trace_path.with_name(trace_path.name.replace(".trace.json", ".png"))
        source_path = doc.get("request", {}).get("source_path")
        if not result_png.is_file() or not source_path or not Path(source_path).is_file():
            continue
        target = country(doc["country"])
        source = Path(source_path).read_bytes()
        output = result_png.read_bytes()
        rows.append(MetricResult(
            image_id=doc["image_id"],
            pipeline_id=doc["pipeline"],
            target=target.iso_code,
            image_similarity=image_similarity(source, output, backends),
            country_relevance=country_relevance(output, target, backends),
            relevance_delta=relevance_delta(source, output, target, backends),
        ))

    filtered = len(rows)
    if args.thresholds and Path(args.thresholds).is_file():
        thresholds = load_thresholds(args.thresholds)
        kept = []
        for row in rows:
            t = thresholds.get(row.target) or thresholds.get("_pooled")
            kept.extend(filter_unedited([row], t) if t else [row])
        rows = kept
    filtered -= len(rows)

    write_metrics_csv(rows, args.out)
    _emit({
        "command": "metrics",
        "status": "ok",
        "out": str(args.out),
        "rows": len(rows),
        "filtered_unedited": filtered,
    })
    return 0


def cmd_eval_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .evaluation.instances import build_instances_from_results, save_instances
    from .evaluation.service import create_app, image_paths_for_instances
    from .evaluation.store import RatingsStore

    contexts: dict[str, str] = {}
    kinds: dict[str, str] = {}
    if args.manifest:
        from .datasets import ApplicationEntry, load_dataset

        dataset = load_dataset(args.manifest)
        for entry in dataset.entries:
            if isinstance(entry, ApplicationEntry):
                kinds[entry.image.image_id] = entry.kind
                contexts[entry.image.image_id] = entry.task_context

    instances = build_instances_from_results(
        args.results, args.seed, kinds=kinds, contexts=contexts,
    )
    store = RatingsStore(args.store or (Path(args.results) / "ratings.jsonl"))
    save_instances(instances, store.path.parent / "instances.jsonl")
    app = create_app(
        instances, store, image_paths_for_instances(instances),
        ui_dir=args.ui,
        raters_per_instance=args.raters_per_instance or None,
    )
    _emit({
        "command": "eval serve",
        "status": "serving",
        "instances": len(instances),
        "port": args.port,
    })
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_eval_report(args: argparse.Namespace) -> int:
    from .evaluation.aggregate import aggregate, plot_report
    from .evaluation.instances import load_instances
    from .evaluation.store import RatingsStore

    instances = load_instances(args.instances)
    store = RatingsStore(args.store)
    report = aggregate(store, instances)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.save(out / "report.json")
    plots = plot_report(report, out / "plots")
    _emit({
        "command": "eval report",
        "status": "ok",
        "out": str(out / "report.json"),
        "plots": len(plots),
        "ratings": report.report["ratings_total"],
    })
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="transcreate",
        description="Transcreate images across cultural boundaries and evaluate the results.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a dataset manifest")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_validate)

    index = sub.add_parser("index", help="retrieval index operations")
    index_sub = index.add_subparsers(dest="index_command", required=True)
    p = index_sub.add_parser("build", help="build a country index from a metadata snapshot")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--country", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strict-substring-tld", action="store_true",
                   help="use the historical substring ccTLD rule instead of host TLD matching")
    p.set_defaults(func=cmd_index_build)

    p = sub.add_parser("run", help="run transcreation pipelines over a manifest")
    p.add_argument("--config", default=None)
    p.add_argument("--manifest", required=True)
    p.add_argument("--pipelines", default="all", help="comma list; default all four")
    p.add_argument("--countries", default="all", help="comma list of iso codes or names")
    p.add_argument("--out", required=True)
    p.add_argument("--indices", default=None, help="directory of per-country index dirs (cap-retrieve)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=8)
    p.add_argument("--dry-run", action="store_true")
    p.add_argument("--skip-same-country", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("metrics", help="compute metrics over a batch output tree")
    p.add_argument("--results", required=True)
    p.add_argument("--thresholds", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_metrics)

    ev = sub.add_parser("eval", help="human evaluation service and reports")
    ev_sub = ev.add_subparsers(dest="eval_command", required=True)
    p = ev_sub.add_parser("serve", help="serve the rating API over batch results")
    p.add_argument("--results", required=True)
    p.add_argument("--manifest", default=None)
    p.add_argument("--store", default=None)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ui", default=None, help="directory with a built rating UI to serve at /")
    p.add_argument("--raters-per-instance", type=int, default=1,
                   help="distinct raters per instance; 0 means unlimited")
    p.set_defaults(func=cmd_eval_serve)
    p = ev_sub.add_parser("report", help="aggregate a ratings store")
    p.add_argument("--store", required=True)
    p.add_argument("--instances", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command if args.command != "index" else "index build"
    if args.command == "eval":
        command = f"eval {args.eval_command}"
    try:
        return args.func(args)
    except (TranscreateError, OSError, ValueError, json.JSONDecodeError) as exc:
        return _fail(command, exc)


if __name__ == "__main__":
    sys.exit(main())
