"""Command-line entry point: sample, aggregate, agreement, stats, run, score, report.

Exit codes: 0 success, 2 usage, 3 data error, 4 provider failure or
partially failed run.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Any, Sequence

from . import annotation, corpus, extraction, inference, metrics
from .corpus import FORMAT_VERSION, SamplingPlan
from .errors import DataError, InsufficientReviews, ProviderFailure, UnknownRun
from .jsonio import dump_json, load_json, write_jsonl
from .model import Review
from .prompting import PROMPT_VERSION, InferenceConfig, Strategy, default_config

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_PROVIDER = 4


def _load_reviews(path: str) -> corpus.CorpusFile:
    loaded = corpus.load_corpus(path)
    for rejection in loaded.rejections:
        log.warning("%s:%d rejected: %s", path, rejection.line_no, rejection.reason)
    return loaded


def _review_map(corpus_file: corpus.CorpusFile) -> dict[str, Review]:
    return {r.review_id: r for r in corpus_file.records}


def _write_text(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_plan(args: argparse.Namespace) -> SamplingPlan:
    data = load_json(args.plan)
    if args.seed is not None:
        data["seed"] = args.seed
    return SamplingPlan.from_dict(data)


def cmd_sample(args: argparse.Namespace) -> int:
    plan = _load_plan(args)
    loaded = _load_reviews(args.corpus)
    filtered = corpus.filter_by_length(loaded.records, plan)

    items_by_domain: dict[str, list[str]] = {}
    for review in loaded.records:
        key = review.domain.value
        bucket = items_by_domain.setdefault(key, [])
        if review.item_id not in bucket:
            bucket.append(review.item_id)
    filtered_by_item: dict[str, list[Review]] = {}
    for review in filtered:
        filtered_by_item.setdefault(review.item_id, []).append(review)

    sample: list[Review] = []
    manifest_items: dict[str, Any] = {}
    domain_summary: dict[str, Any] = {}
    for domain in sorted(items_by_domain):
        items = items_by_domain[domain]
        chosen = corpus.srswor(items, plan.items_per_group, corpus.derive_seed(plan.seed, "items", domain))
        domain_summary[domain] = {
            "items_available": len(items),
            "items_sampled": len(chosen),
            "inclusion_probability": plan.items_per_group / len(items),
        }
        for item_id in chosen:
            item_reviews = filtered_by_item.get(item_id, [])
            if len(item_reviews) < plan.reviews_per_item:
                raise InsufficientReviews(item_id, len(item_reviews), plan.reviews_per_item)
            taken = corpus.stratified_review_sample(item_reviews, plan)
            sample.extend(taken)
            manifest_items[item_id] = {
                "domain": domain,
                "strata": corpus.stratum_counts(item_reviews, plan),
                "sampling_fraction": plan.reviews_per_item / len(item_reviews),
            }

    write_jsonl(args.out, (corpus.review_to_dict(r) for r in sample))
    manifest = {
        "format_version": FORMAT_VERSION,
        "seed": plan.seed,
        "plan": plan.to_dict(),
        "domains": domain_summary,
        "items": manifest_items,
        "n_reviews": len(sample),
    }
    dump_json(str(args.out) + ".manifest.json", manifest)
    print(f"wrote {len(sample)} reviews to {args.out}")
    return EXIT_OK


def cmd_aggregate(args: argparse.Namespace) -> int:
    reviews = _review_map(_load_reviews(args.corpus))
    records = annotation.load_annotations(args.annotations, reviews)
    grouped: dict[str, list[annotation.AnnotationRecord]] = {}
    for record in records:
        grouped.setdefault(record.review_id, []).append(record)
    golds = [annotation.aggregate_gold(group) for _, group in sorted(grouped.items())]
    write_jsonl(args.out, (annotation.gold_to_dict(g) for g in golds))
    print(f"wrote {len(golds)} gold records to {args.out}")
    return EXIT_OK


def cmd_agreement(args: argparse.Namespace) -> int:
    corpus_file = _load_reviews(args.corpus)
    records = annotation.load_annotations(args.annotations, _review_map(corpus_file))
    report = annotation.build_agreement_report(records, corpus_file.records)
    _write_text(annotation.render_agreement_report(report, args.format), args.out)
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    corpus_file = _load_reviews(args.corpus)
    golds = annotation.load_gold(args.gold, _review_map(corpus_file))
    stats = annotation.gold_statistics(golds, corpus_file.records)
    _write_text(annotation.render_gold_statistics(stats, args.format), args.out)
    return EXIT_OK


def _resolve_profile(spec: str) -> inference.ProviderProfile:
    path, _, name = spec.partition(":")
    profiles = inference.load_provider_profiles(path)
    if name:
        if name not in profiles:
            raise DataError(f"profile {name!r} not in {path} (has: {', '.join(profiles)})")
        return profiles[name]
    if len(profiles) > 1:
        raise DataError(f"{path} defines several profiles; use PATH:NAME (has: {', '.join(profiles)})")
    return next(iter(profiles.values()))


def cmd_run(args: argparse.Namespace) -> int:
    strategy = Strategy(args.strategy)
    profile = _resolve_profile(args.profile)
    config = InferenceConfig.from_file(args.config) if args.config else default_config()
    corpus_file = _load_reviews(args.corpus)
    runs_dir = Path(args.runs_dir)
    run_id = args.run_id or time.strftime("run-%Y%m%d-%H%M%S")

    run_dir = runs_dir / run_id
    manifest_path = run_dir / "manifest.json"
    if manifest_path.exists():
        if not args.resume:
            raise DataError(f"run {run_id!r} already exists; pass --resume to continue it")
        manifest = load_json(manifest_path)
        if manifest.get("strategy") != strategy.value or manifest.get("profile") != profile.name:
            raise DataError("resume with a different strategy or profile is not allowed")
    elif args.resume:
        raise UnknownRun(run_id)
    else:
        run_dir.mkdir(parents=True, exist_ok=True)
        dump_json(manifest_path, {
            "format_version": FORMAT_VERSION,
            "run_id": run_id,
            "corpus": str(args.corpus),
            "strategy": strategy.value,
            "profile": profile.name,
            "prompt_version": PROMPT_VERSION,
            "config": config.to_dict(),
            "created_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "seed": args.seed,
            "notes": {"zs_cot_system_message": "none"},
        })

    inference.run_experiment(
        corpus_file.records, strategy, profile, config,
        runs_dir=runs_dir, run_id=run_id,
    )
    print(run_id)
    entries = inference.read_ledger(runs_dir, run_id)
    ok = inference.ok_review_ids(entries, run_id)
    failed = {e.review_id for e in entries if e.run_id == run_id} - ok
    if failed:
        log.error("run %s: %d reviews failed", run_id, len(failed))
        return EXIT_PROVIDER
    return EXIT_OK


def cmd_score(args: argparse.Namespace) -> int:
    runs_dir = Path(args.runs_dir)
    run_dir = runs_dir / args.run_id
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.exists():
        raise UnknownRun(args.run_id)
    manifest = load_json(manifest_path)
    corpus_path = args.corpus or manifest["corpus"]
    reviews = _review_map(_load_reviews(corpus_path))
    golds = annotation.load_gold(args.gold, reviews)

    entries = inference.read_ledger(runs_dir, args.run_id)
    entries = [e for e in entries if e.run_id == args.run_id]
    latest_ok: dict[str, inference.RunLedgerEntry] = {}
    failed_ids: set[str] = set()
    for entry in entries:
        if entry.status == inference.LedgerStatus.OK:
            latest_ok[entry.review_id] = entry
            failed_ids.discard(entry.review_id)
        elif entry.review_id not in latest_ok:
            failed_ids.add(entry.review_id)

    reports = []
    for review_id in sorted(latest_ok):
        review = reviews.get(review_id)
        if review is None:
            raise DataError(f"run references review {review_id!r} missing from the corpus")
        reports.append(extraction.parse_output(latest_ok[review_id].raw_response, review))
    write_jsonl(
        run_dir / "parsed",
        (
            {**extraction.parse_report_to_dict(r), "format_version": FORMAT_VERSION}
            for r in reports
        ),
    )

    predictions = [r.output for r in reports]
    score = metrics.score_predictions(predictions, golds)
    parse_stats = {
        "clean": sum(1 for r in reports if r.parse_status is extraction.ParseStatus.CLEAN),
        "repaired": sum(1 for r in reports if r.parse_status is extraction.ParseStatus.REPAIRED),
        "unparseable": sum(
            1 for r in reports if r.parse_status is extraction.ParseStatus.UNPARSEABLE
        ),
        "failed_requests": len(failed_ids),
        "dropped_triggers": sum(len(r.dropped_triggers) for r in reports),
        "dropped_emotions": sum(len(r.dropped_emotions) for r in reports),
    }
    document = {
        "format_version": FORMAT_VERSION,
        "run_id": args.run_id,
        "strategy": manifest.get("strategy"),
        "prompt_version": manifest.get("prompt_version"),
        "n_reviews_scored": len(predictions),
        "parse_stats": parse_stats,
        **metrics.score_report_to_dict(score),
    }
    dump_json(run_dir / "scores.json", document)

    label = f"{manifest.get('profile', args.run_id)}_{manifest.get('strategy', '')}"
    text = metrics.render_score_rows({label: metrics.score_row(score)}, args.format)
    text += "\nparse stats: " + ", ".join(f"{k}={v}" for k, v in parse_stats.items()) + "\n"
    text += _render_confusion(document["confusion"], args.format)
    _write_text(text, args.out)
    return EXIT_OK


def _render_confusion(confusion: dict[str, dict[str, float]], fmt: str) -> str:
    labels = list(confusion)
    header = ["pred\\gold"] + labels
    rows = [header] + [
        [p] + [f"{confusion[p][g]:.2f}" for g in labels] for p in labels
    ]
    if fmt == "csv":
        return "\n".join(",".join(row) for row in rows) + "\n"
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    return (
        "\n".join(
            "  ".join(cell.rjust(w) for cell, w in zip(row, widths)).rstrip() for row in rows
        )
        + "\n"
    )


def cmd_report(args: argparse.Namespace) -> int:
    rows: dict[str, Sequence[float]] = {}
    for path in args.scores:
        document = load_json(path)
        name = f"{document.get('run_id', path)}_{document.get('strategy', '')}"
        rows[name] = (
            document["emotion"]["precision"],
            document["emotion"]["recall"],
            document["emotion"]["f1"],
            document["trigger"]["exact_match"],
            document["trigger"]["partial_match"],
            document["trigger"]["rouge1"],
            document["trigger"]["rougeL"],
        )
    _write_text(metrics.render_score_rows(rows, args.format), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eotbench",
        description="Benchmark harness for joint emotion and opinion-trigger extraction",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="length-filter and sample a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--plan", required=True, help="JSON sampling plan file")
    p.add_argument("--seed", type=int, default=None, help="override the plan seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("aggregate", help="aggregate three-annotator files into gold")
    p.add_argument("--annotations", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("agreement", help="inter-annotator agreement statistics")
    p.add_argument("--annotations", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("table", "csv"), default="table")
    p.set_defaults(func=cmd_agreement)

    p = sub.add_parser("stats", help="gold-standard descriptive statistics")
    p.add_argument("--gold", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("table", "csv"), default="table")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("run", help="run prompts against a provider")
    p.add_argument("--corpus", required=True, help="review file (typically a sample)")
    p.add_argument("--strategy", required=True, choices=[s.value for s in Strategy])
    p.add_argument("--profile", required=True, help="profile file path, or PATH:NAME")
    p.add_argument("--config", default=None, help="inference config JSON")
    p.add_argument("--run-id", default=None)
    p.add_argument("--runs-dir", default="runs")
    p.add_argument("--resume", action="store_true")
    p.add_argument("--seed", type=int, default=None, help="recorded in the manifest")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("score", help="parse and score a finished run")
    p.add_argument("--run-id", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--corpus", default=None, help="defaults to the run manifest's corpus")
    p.add_argument("--runs-dir", default="runs")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("table", "csv"), default="table")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("report", help="combine score files into one table")
    p.add_argument("scores", nargs="+", help="scores.json files")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("table", "csv"), default="table")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ProviderFailure as exc:
        log.error("%s", exc)
        return EXIT_PROVIDER
    except (DataError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
