"""Three-annotator ingestion, gold-standard aggregation, and agreement.

Gold aggregation: an emotion enters the gold standard when at least two
of the three raters list it; its triggers are the union of all raters'
triggers for that emotion, deduplicated on normalized text, and when
retained spans overlap in character intervals only the longest survives
(ties: leftmost start, then lexicographically smallest text). Three-way
disagreement falls back to Neutral with a "no majority" provenance flag.

Agreement: pairwise Cohen kappa and three-rater Fleiss kappa for
emotions (multi-label sets expanded to per-(review, emotion) binary
items over the 9-label space), plus token-level kappas for triggers so
partially overlapping spans still earn credit.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .corpus import FORMAT_VERSION
from .errors import (
    DataError,
    DegenerateDistribution,
    MismatchedReviewIds,
    WrongAnnotatorCount,
)
from .jsonio import iter_jsonl_lines
from .model import (
    DOMAIN_ORDER,
    EMOTION_ORDER,
    EmotionLabel,
    EmotionTriggers,
    EotOutput,
    Review,
    TriggerSpan,
    canonical_emotion,
    locate_span,
    normalize_text,
    tokenize,
    tokenize_with_spans,
)

TRIGGER_KAPPA_POOLING_NOTE = (
    "token-level trigger kappa pools binary (review, token, emotion) items across "
    "emotions; items are generated for each emotion used by at least one rater of "
    "the pair on that review"
)


@dataclass(frozen=True)
class AnnotationRecord:
    review_id: str
    annotator_id: str
    output: EotOutput


@dataclass(frozen=True)
class TriggerProvenance:
    emotion: str
    text: str
    annotators: tuple[str, ...]


@dataclass(frozen=True)
class GoldProvenance:
    emotion_votes: dict[str, int]
    trigger_annotators: tuple[TriggerProvenance, ...]
    no_majority: bool = False


@dataclass(frozen=True)
class GoldRecord:
    review_id: str
    output: EotOutput
    provenance: GoldProvenance


def parse_output_object(obj: Mapping[str, Any], review: Review) -> EotOutput:
    """Build a validated EotOutput from a trusted annotation object.

    Strict: unknown labels, non-extractive triggers, duplicate emotions,
    or Neutral-with-triggers all raise DataError.
    """
    emotions = obj.get("emotions")
    if not isinstance(emotions, list):
        raise DataError("record has no 'emotions' array")
    pairs = []
    for entry in emotions:
        if not isinstance(entry, dict):
            raise DataError(f"emotion entry is not an object: {entry!r}")
        label = canonical_emotion(str(entry.get("emotion", "")))
        triggers = entry.get("triggers", [])
        if not isinstance(triggers, list) or not all(isinstance(t, str) for t in triggers):
            raise DataError(f"triggers of {label.value} must be a list of strings")
        spans = tuple(locate_span(review.text, t) for t in triggers)
        pairs.append(EmotionTriggers(label, spans))
    try:
        return EotOutput(review.review_id, tuple(pairs))
    except ValueError as exc:
        raise DataError(str(exc)) from None


def load_annotations(path: Path | str, reviews: Mapping[str, Review]) -> list[AnnotationRecord]:
    """Load annotator files: one JSON object per line, ``annotator_id`` plus
    the review_id / emotions shape used everywhere else."""
    records: list[AnnotationRecord] = []
    for line_no, line in iter_jsonl_lines(path):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:{line_no}: invalid JSON: {exc.msg}") from None
        if not isinstance(obj, dict):
            raise DataError(f"{path}:{line_no}: record is not an object")
        review_id = obj.get("review_id")
        annotator_id = obj.get("annotator_id")
        if not isinstance(review_id, str) or not isinstance(annotator_id, str):
            raise DataError(f"{path}:{line_no}: review_id and annotator_id are required")
        review = reviews.get(review_id)
        if review is None:
            raise DataError(f"{path}:{line_no}: unknown review_id {review_id!r}")
        try:
            output = parse_output_object(obj, review)
        except DataError as exc:
            raise DataError(f"{path}:{line_no}: {exc}") from None
        records.append(AnnotationRecord(review_id, annotator_id, output))
    return records


def _dedup_normalized(spans: Iterable[tuple[TriggerSpan, str]]) -> list[tuple[TriggerSpan, str]]:
    """One span per normalized text: the (start, end, text)-smallest wins."""
    best: dict[str, tuple[TriggerSpan, str]] = {}
    for span, norm in spans:
        kept = best.get(norm)
        if kept is None or (span.start, span.end, span.text) < (kept[0].start, kept[0].end, kept[0].text):
            best[norm] = (span, norm)
    return sorted(best.values(), key=lambda sn: (sn[0].start, sn[0].end, sn[0].text))


def resolve_overlaps(spans: Sequence[TriggerSpan]) -> list[TriggerSpan]:
    """Keep only the longest span of any overlapping group.

    Greedy by (length desc, start asc, text asc); the result is pairwise
    non-overlapping and ordered by start.
    """
    ordered = sorted(spans, key=lambda s: (-(s.end - s.start), s.start, s.text))
    kept: list[TriggerSpan] = []
    for span in ordered:
        if not any(span.overlaps(other) for other in kept):
            kept.append(span)
    return sorted(kept, key=lambda s: s.start)


def aggregate_gold(annotations: Sequence[AnnotationRecord]) -> GoldRecord:
    """Majority-vote aggregation of exactly three annotator records."""
    if len(annotations) != 3:
        raise WrongAnnotatorCount(f"need exactly 3 records, got {len(annotations)}")
    review_ids = {a.review_id for a in annotations}
    if len(review_ids) != 1:
        raise MismatchedReviewIds(f"records span several reviews: {sorted(review_ids)}")
    review_id = annotations[0].review_id

    votes: Counter[EmotionLabel] = Counter()
    for record in annotations:
        votes.update(record.output.emotions)
    emotion_votes = {e.value: votes[e] for e in EMOTION_ORDER if votes[e]}

    winners = [e for e in EMOTION_ORDER if e is not EmotionLabel.NEUTRAL and votes[e] >= 2]
    if winners:
        pairs = []
        trigger_provenance: list[TriggerProvenance] = []
        for emotion in winners:
            pooled = [
                (span, normalize_text(span.text))
                for record in annotations
                for span in record.output.triggers_for(emotion)
            ]
            deduped = _dedup_normalized(pooled)
            retained = resolve_overlaps([span for span, _ in deduped])
            for span in retained:
                norm = normalize_text(span.text)
                contributors = tuple(
                    record.annotator_id
                    for record in annotations
                    if any(
                        normalize_text(s.text) == norm
                        for s in record.output.triggers_for(emotion)
                    )
                )
                trigger_provenance.append(TriggerProvenance(emotion.value, span.text, contributors))
            pairs.append(EmotionTriggers(emotion, tuple(retained)))
        provenance = GoldProvenance(emotion_votes, tuple(trigger_provenance))
        return GoldRecord(review_id, EotOutput(review_id, tuple(pairs)), provenance)

    no_majority = votes[EmotionLabel.NEUTRAL] < 2
    neutral = EotOutput(review_id, (EmotionTriggers(EmotionLabel.NEUTRAL, ()),))
    return GoldRecord(review_id, neutral, GoldProvenance(emotion_votes, (), no_majority=no_majority))


def gold_to_dict(gold: GoldRecord) -> dict[str, Any]:
    return {
        "review_id": gold.review_id,
        "emotions": [
            {"emotion": p.emotion.value, "triggers": [s.text for s in p.triggers]}
            for p in gold.output.pairs
        ],
        "provenance": {
            "emotion_votes": gold.provenance.emotion_votes,
            "trigger_annotators": [
                {"emotion": t.emotion, "text": t.text, "annotators": list(t.annotators)}
                for t in gold.provenance.trigger_annotators
            ],
            "no_majority": gold.provenance.no_majority,
        },
        "format_version": FORMAT_VERSION,
    }


def load_gold(path: Path | str, reviews: Mapping[str, Review]) -> list[GoldRecord]:
    """Read a gold file back, relocating trigger spans in the review text."""
    records: list[GoldRecord] = []
    for line_no, line in iter_jsonl_lines(path):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:{line_no}: invalid JSON: {exc.msg}") from None
        review_id = obj.get("review_id")
        review = reviews.get(review_id)
        if review is None:
            raise DataError(f"{path}:{line_no}: unknown review_id {review_id!r}")
        output = parse_output_object(obj, review)
        prov_obj = obj.get("provenance", {})
        provenance = GoldProvenance(
            emotion_votes=dict(prov_obj.get("emotion_votes", {})),
            trigger_annotators=tuple(
                TriggerProvenance(t["emotion"], t["text"], tuple(t.get("annotators", ())))
                for t in prov_obj.get("trigger_annotators", ())
            ),
            no_majority=bool(prov_obj.get("no_majority", False)),
        )
        records.append(GoldRecord(review_id, output, provenance))
    return records


# ---------------------------------------------------------------------------
# Agreement statistics
# ---------------------------------------------------------------------------


def kappa_from_binary_pairs(pairs: Sequence[tuple[bool, bool]]) -> float:
    """Two-rater kappa over shared binary items.

             p_o - p_e                 p_o = observed agreement rate
    kappa = -----------   with         p_e = p_a*p_b + (1-p_a)*(1-p_b)
             1  -  p_e

    An empty pool or unanimous identical ratings count as vacuously
    perfect (1.0); chance agreement of 1 with imperfect observation
    raises DegenerateDistribution.
    """
    n = len(pairs)
    if n == 0:
        return 1.0
    agree = sum(1 for a, b in pairs if a == b)
    yes_a = sum(1 for a, _ in pairs if a)
    yes_b = sum(1 for _, b in pairs if b)
    p_o = agree / n
    p_a, p_b = yes_a / n, yes_b / n
    p_e = p_a * p_b + (1 - p_a) * (1 - p_b)
    if p_e == 1.0:
        if p_o == 1.0:
            return 1.0
        raise DegenerateDistribution("chance agreement is 1 but raters disagree")
    return (p_o - p_e) / (1 - p_e)


def cohen_kappa(
    labels_a: Sequence[set[EmotionLabel]], labels_b: Sequence[set[EmotionLabel]]
) -> float:
    """Two-rater kappa for multi-label emotion sets.

    Each review expands to 9 binary items (one per admissible label);
    kappa is computed over the pooled items.
    """
    if len(labels_a) != len(labels_b) or not labels_a:
        raise DataError("label sequences must be non-empty and equal length")
    pairs = [
        (label in sa, label in sb)
        for sa, sb in zip(labels_a, labels_b)
        for label in EMOTION_ORDER
    ]
    return kappa_from_binary_pairs(pairs)


def fleiss_kappa(item_category_counts: Sequence[Sequence[int]]) -> float:
    """Multi-rater kappa from an items x categories count matrix.

    Every row must sum to the same rater count n >= 2. Implements
    kappa = (P_bar - P_bar_e) / (1 - P_bar_e) with P_bar the mean
    per-item pairwise agreement and P_bar_e the squared category
    proportions.
    """
    data = np.asarray(item_category_counts, dtype=float)
    if data.ndim != 2 or data.shape[0] < 1:
        raise DataError("need a non-empty items x categories matrix")
    row_sums = data.sum(axis=1)
    n = row_sums[0]
    if n < 2 or not np.all(row_sums == n):
        raise DataError("all rows must sum to the same rater count >= 2")
    p_items = ((data * data).sum(axis=1) - n) / (n * (n - 1))
    p_bar = float(p_items.mean())
    proportions = data.sum(axis=0) / data.sum()
    p_bar_e = float((proportions**2).sum())
    if p_bar_e == 1.0:
        if p_bar == 1.0:
            return 1.0
        raise DegenerateDistribution("chance agreement is 1 but raters disagree")
    return (p_bar - p_bar_e) / (1 - p_bar_e)


@dataclass
class AgreementReport:
    """Kappas per annotator pair and domain, plus Fleiss and averages.

    Pair keys are (annotator_id, annotator_id) tuples in sorted id
    order; domain keys are domain names. ``*_overall`` values pool items
    across domains rather than averaging the per-domain kappas.
    """

    pairwise_emotion_kappa: dict[tuple[str, str], dict[str, float]]
    pairwise_emotion_overall: dict[tuple[str, str], float]
    fleiss_emotion_kappa: dict[str, float]
    fleiss_emotion_overall: float | None
    pairwise_trigger_token_kappa: dict[tuple[str, str], dict[str, float]]
    pairwise_trigger_token_overall: dict[tuple[str, str], float]
    fleiss_trigger_token_kappa: dict[str, float]
    fleiss_trigger_token_overall: float | None

    def domains(self) -> list[str]:
        present: set[str] = set()
        for by_domain in self.pairwise_emotion_kappa.values():
            present.update(by_domain)
        return [d.value for d in DOMAIN_ORDER if d.value in present]

    def pairs(self) -> list[tuple[str, str]]:
        # Table layout order: adjacent pairs first (A1/A2, A2/A3), then A1/A3
        ids = sorted({a for pair in self.pairwise_emotion_kappa for a in pair})
        ordered = []
        for i in range(len(ids) - 1):
            ordered.append((ids[i], ids[i + 1]))
        if len(ids) > 2:
            ordered.append((ids[0], ids[-1]))
        ordered += sorted(p for p in self.pairwise_emotion_kappa if p not in ordered)
        return [p for p in ordered if p in self.pairwise_emotion_kappa]


def _safe_kappa(pairs: Sequence[tuple[bool, bool]]) -> float:
    try:
        return kappa_from_binary_pairs(pairs)
    except DegenerateDistribution:
        return float("nan")


def _index_reviews(reviews: Iterable[Review]) -> dict[str, Review]:
    return {r.review_id: r for r in reviews}


def _records_by_review(
    annotations: Sequence[AnnotationRecord],
) -> dict[str, dict[str, AnnotationRecord]]:
    grouped: dict[str, dict[str, AnnotationRecord]] = {}
    for record in annotations:
        per_review = grouped.setdefault(record.review_id, {})
        if record.annotator_id in per_review:
            raise DataError(
                f"annotator {record.annotator_id!r} appears twice for review {record.review_id!r}"
            )
        per_review[record.annotator_id] = record
    return grouped


def _token_coverage(review: Review, output: EotOutput, emotion: EmotionLabel) -> list[bool]:
    tokens = tokenize_with_spans(review.text)
    spans = output.triggers_for(emotion)
    return [any(t.start < s.end and s.start < t.end for s in spans) for t in tokens]


def trigger_token_kappa(
    annotations: Sequence[AnnotationRecord], reviews: Iterable[Review]
) -> tuple[dict[tuple[str, str], dict[str, float]], dict[tuple[str, str], float]]:
    """Pairwise token-level trigger agreement, per domain and pooled overall.

    Every review token becomes one binary item per emotion in use by the
    pair on that review: covered by one of the rater's trigger spans for
    that emotion, or not (character-range overlap).
    """
    review_map = _index_reviews(reviews)
    grouped = _records_by_review(annotations)
    annotator_ids = sorted({a.annotator_id for a in annotations})
    pools: dict[tuple[str, str], dict[str, list[tuple[bool, bool]]]] = {
        pair: {} for pair in combinations(annotator_ids, 2)
    }
    for review_id, per_annotator in grouped.items():
        review = review_map.get(review_id)
        if review is None:
            raise DataError(f"annotations reference unknown review {review_id!r}")
        token_spans = tokenize_with_spans(review.text)
        for pair in combinations(sorted(per_annotator), 2):
            rec_a, rec_b = per_annotator[pair[0]], per_annotator[pair[1]]
            emotions = sorted(
                (rec_a.output.emotions | rec_b.output.emotions) - {EmotionLabel.NEUTRAL},
                key=EMOTION_ORDER.index,
            )
            items = pools[pair].setdefault(review.domain.value, [])
            for emotion in emotions:
                spans_a = rec_a.output.triggers_for(emotion)
                spans_b = rec_b.output.triggers_for(emotion)
                for t in token_spans:
                    covered_a = any(t.start < s.end and s.start < t.end for s in spans_a)
                    covered_b = any(t.start < s.end and s.start < t.end for s in spans_b)
                    items.append((covered_a, covered_b))
    per_domain = {
        pair: {domain: _safe_kappa(items) for domain, items in by_domain.items()}
        for pair, by_domain in pools.items()
    }
    overall = {
        pair: _safe_kappa([item for items in by_domain.values() for item in items])
        for pair, by_domain in pools.items()
    }
    return per_domain, overall


def build_agreement_report(
    annotations: Sequence[AnnotationRecord], reviews: Iterable[Review]
) -> AgreementReport:
    review_map = _index_reviews(reviews)
    grouped = _records_by_review(annotations)
    annotator_ids = sorted({a.annotator_id for a in annotations})

    emotion_sets: dict[tuple[str, str], dict[str, tuple[list, list]]] = {
        pair: {} for pair in combinations(annotator_ids, 2)
    }
    fleiss_rows: dict[str, list[tuple[int, int]]] = {}
    rater_count = len(annotator_ids)
    for review_id, per_annotator in grouped.items():
        review = review_map.get(review_id)
        if review is None:
            raise DataError(f"annotations reference unknown review {review_id!r}")
        domain = review.domain.value
        for pair in combinations(sorted(per_annotator), 2):
            sets_a, sets_b = emotion_sets[pair].setdefault(domain, ([], []))
            sets_a.append(per_annotator[pair[0]].output.emotions)
            sets_b.append(per_annotator[pair[1]].output.emotions)
        if len(per_annotator) == rater_count and rater_count >= 2:
            rows = fleiss_rows.setdefault(domain, [])
            for label in EMOTION_ORDER:
                yes = sum(1 for rec in per_annotator.values() if label in rec.output.emotions)
                rows.append((yes, rater_count - yes))

    pairwise_emotion = {
        pair: {domain: cohen_kappa(a, b) for domain, (a, b) in by_domain.items()}
        for pair, by_domain in emotion_sets.items()
    }
    pairwise_emotion_overall = {}
    for pair, by_domain in emotion_sets.items():
        all_a = [s for a, _ in by_domain.values() for s in a]
        all_b = [s for _, b in by_domain.values() for s in b]
        pairwise_emotion_overall[pair] = cohen_kappa(all_a, all_b) if all_a else float("nan")

    fleiss_by_domain = {domain: fleiss_kappa(rows) for domain, rows in fleiss_rows.items()}
    pooled_rows = [row for rows in fleiss_rows.values() for row in rows]
    fleiss_overall = fleiss_kappa(pooled_rows) if pooled_rows else None

    trig_by_domain, trig_overall = trigger_token_kappa(annotations, review_map.values())

    trig_fleiss_rows: dict[str, list[tuple[int, int]]] = {}
    for review_id, per_annotator in grouped.items():
        if len(per_annotator) != rater_count or rater_count < 2:
            continue
        review = review_map[review_id]
        emotions = sorted(
            set().union(*(rec.output.emotions for rec in per_annotator.values()))
            - {EmotionLabel.NEUTRAL},
            key=EMOTION_ORDER.index,
        )
        if not emotions:
            continue
        rows = trig_fleiss_rows.setdefault(review.domain.value, [])
        coverages = {
            annotator: {e: _token_coverage(review, rec.output, e) for e in emotions}
            for annotator, rec in per_annotator.items()
        }
        n_tokens = len(tokenize_with_spans(review.text))
        for emotion in emotions:
            for idx in range(n_tokens):
                yes = sum(1 for annotator in per_annotator if coverages[annotator][emotion][idx])
                rows.append((yes, rater_count - yes))
    trig_fleiss = {domain: fleiss_kappa(rows) for domain, rows in trig_fleiss_rows.items()}
    pooled_trig = [row for rows in trig_fleiss_rows.values() for row in rows]
    trig_fleiss_overall = fleiss_kappa(pooled_trig) if pooled_trig else None

    return AgreementReport(
        pairwise_emotion_kappa=pairwise_emotion,
        pairwise_emotion_overall=pairwise_emotion_overall,
        fleiss_emotion_kappa=fleiss_by_domain,
        fleiss_emotion_overall=fleiss_overall,
        pairwise_trigger_token_kappa=trig_by_domain,
        pairwise_trigger_token_overall=trig_overall,
        fleiss_trigger_token_kappa=trig_fleiss,
        fleiss_trigger_token_overall=trig_fleiss_overall,
    )


def render_agreement_report(report: AgreementReport, fmt: str = "table") -> str:
    """Domain-by-pair agreement table, emotion section then trigger section."""
    pairs = report.pairs()
    domains = report.domains()
    header = ["Domain"] + [f"{a}/{b}" for a, b in pairs] + ["Average", "Fleiss"]
    note = f"# {TRIGGER_KAPPA_POOLING_NOTE}"

    def section(
        title: str,
        per_pair: dict[tuple[str, str], dict[str, float]],
        fleiss: dict[str, float],
        fleiss_overall: float | None,
    ) -> list[list[str]]:
        rows: list[list[str]] = [[f"[{title}]"] + [""] * (len(header) - 1)]
        means: list[list[float]] = []
        for domain in domains:
            values = [per_pair.get(pair, {}).get(domain, float("nan")) for pair in pairs]
            means.append(values)
            avg = sum(values) / len(values) if values else float("nan")
            rows.append(
                [domain]
                + [f"{v:.4f}" for v in values]
                + [f"{avg:.4f}", f"{fleiss.get(domain, float('nan')):.4f}"]
            )
        if means:
            col_means = [sum(col) / len(col) for col in zip(*means)]
            rows.append(
                ["Overall Average"]
                + [f"{v:.4f}" for v in col_means]
                + [
                    f"{sum(col_means) / len(col_means):.4f}",
                    "" if fleiss_overall is None else f"{fleiss_overall:.4f}",
                ]
            )
        return rows

    rows = [header]
    rows += section(
        "Emotion Agreement",
        report.pairwise_emotion_kappa,
        report.fleiss_emotion_kappa,
        report.fleiss_emotion_overall,
    )
    rows += section(
        "Trigger Agreement",
        report.pairwise_trigger_token_kappa,
        report.fleiss_trigger_token_kappa,
        report.fleiss_trigger_token_overall,
    )
    if fmt == "csv":
        return note + "\n" + "\n".join(",".join(cell for cell in row) for row in rows) + "\n"
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = [note]
    for row in rows:
        lines.append("  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Gold-standard descriptive statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmotionStats:
    count: int
    share: float  # fraction of the domain's emotion occurrences
    total_triggers: int
    avg_triggers: float
    avg_trigger_tokens: float


@dataclass(frozen=True)
class DomainStats:
    n_reviews: int
    total_emotions: int
    avg_emotions_per_review: float
    per_emotion: dict[str, EmotionStats]


@dataclass(frozen=True)
class GoldStatistics:
    per_domain: dict[str, DomainStats]
    overall: DomainStats


def _domain_stats(records: Sequence[GoldRecord]) -> DomainStats:
    n_reviews = len(records)
    total_emotions = sum(len(g.output.pairs) for g in records)
    per_emotion: dict[str, EmotionStats] = {}
    for label in EMOTION_ORDER:
        count = 0
        trigger_count = 0
        trigger_token_lengths: list[int] = []
        for gold in records:
            if label in gold.output.emotions:
                count += 1
                spans = gold.output.triggers_for(label)
                trigger_count += len(spans)
                trigger_token_lengths.extend(len(tokenize(s.text)) for s in spans)
        per_emotion[label.value] = EmotionStats(
            count=count,
            share=count / total_emotions if total_emotions else 0.0,
            total_triggers=trigger_count,
            avg_triggers=trigger_count / count if count else 0.0,
            avg_trigger_tokens=(
                sum(trigger_token_lengths) / len(trigger_token_lengths)
                if trigger_token_lengths
                else 0.0
            ),
        )
    return DomainStats(
        n_reviews=n_reviews,
        total_emotions=total_emotions,
        avg_emotions_per_review=total_emotions / n_reviews if n_reviews else 0.0,
        per_emotion=per_emotion,
    )


def gold_statistics(gold: Sequence[GoldRecord], reviews: Iterable[Review]) -> GoldStatistics:
    """Per-domain and overall emotion/trigger statistics of a gold set."""
    review_map = _index_reviews(reviews)
    by_domain: dict[str, list[GoldRecord]] = {d.value: [] for d in DOMAIN_ORDER}
    for record in gold:
        review = review_map.get(record.review_id)
        if review is None:
            raise DataError(f"gold references unknown review {record.review_id!r}")
        by_domain[review.domain.value].append(record)
    return GoldStatistics(
        per_domain={domain: _domain_stats(records) for domain, records in by_domain.items()},
        overall=_domain_stats(list(gold)),
    )


def render_gold_statistics(stats: GoldStatistics, fmt: str = "table") -> str:
    domains = [d.value for d in DOMAIN_ORDER]
    header = ["Metric"] + domains + ["Overall"]
    columns = [stats.per_domain[d] for d in domains] + [stats.overall]
    rows: list[list[str]] = [header]
    rows.append(["[Overall Statistics]"] + [""] * (len(header) - 1))
    rows.append(["Total Emotions"] + [str(c.total_emotions) for c in columns])
    rows.append(["Avg Emotions per Review"] + [f"{c.avg_emotions_per_review:.2f}" for c in columns])
    for label in EMOTION_ORDER:
        rows.append([f"[Emotion: {label.value}]"] + [""] * (len(header) - 1))
        stats_row = [c.per_emotion[label.value] for c in columns]
        rows.append(
            ["Count (Percentage)"]
            + [f"{s.count} ({100 * s.share:.1f}%)" for s in stats_row]
        )
        rows.append(["Total Triggers"] + [str(s.total_triggers) for s in stats_row])
        rows.append(["Avg Triggers per Emotion"] + [f"{s.avg_triggers:.2f}" for s in stats_row])
        rows.append(
            ["Avg Trigger Length (words)"] + [f"{s.avg_trigger_tokens:.2f}" for s in stats_row]
        )
    if fmt == "csv":
        return "\n".join(",".join(f'"{c}"' if "," in c else c for c in row) for row in rows) + "\n"
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = []
    for row in rows:
        lines.append("  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"
