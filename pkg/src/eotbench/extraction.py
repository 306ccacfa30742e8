"""Parse raw model responses into validated emotion-trigger outputs.

Parsing is total: any byte string yields a ParseReport, never an
exception. The machine-checkable half of the final self-check is
enforced here: labels outside the 9-label vocabulary are dropped
(emotion faithfulness) and triggers that cannot be located verbatim in
the review are dropped (opinion trigger verifiability). The only repair
attempted is case/whitespace-insensitive relocation; no fuzzy matching,
since aggressive repair would inflate scores.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .errors import NoStructuredBlock, SpanNotFound, UnknownEmotion
from .model import (
    EmotionLabel,
    EmotionTriggers,
    EotOutput,
    Review,
    TriggerSpan,
    canonical_emotion,
    locate_span,
)

REASON_OOV = "OOV"
REASON_NOT_EXTRACTIVE = "NotExtractive"
REASON_NO_VERIFIABLE_TRIGGER = "NoVerifiableTrigger"
REASON_MALFORMED = "Malformed"
REASON_NEUTRAL_WITH_OTHERS = "NeutralWithOthers"
REASON_NEUTRAL_TRIGGER = "NeutralCarriesNoTriggers"


class ParseStatus(Enum):
    CLEAN = "Clean"
    REPAIRED = "Repaired"
    UNPARSEABLE = "Unparseable"


@dataclass(frozen=True)
class DroppedTrigger:
    emotion: str
    text: str
    reason: str


@dataclass(frozen=True)
class DroppedEmotion:
    label: str
    reason: str


@dataclass
class ParseReport:
    output: EotOutput
    dropped_triggers: list[DroppedTrigger] = field(default_factory=list)
    dropped_emotions: list[DroppedEmotion] = field(default_factory=list)
    repair_applied: bool = False
    parse_status: ParseStatus = ParseStatus.CLEAN


def _balanced_block(raw: str, start: int) -> int | None:
    """End index (exclusive) of the object starting at raw[start] == '{'."""
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(raw)):
        ch = raw[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
        elif ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return i + 1
    return None


def extract_structured_block(raw: str) -> str:
    """Return the first balanced top-level object in a raw response.

    Code fences and surrounding prose are skipped by construction (the
    scan starts at brace characters). Among the balanced candidates, the
    first that parses as a JSON object wins; if none parses, the first
    balanced candidate is returned as-is.
    """
    candidates: list[str] = []
    pos = 0
    while True:
        start = raw.find("{", pos)
        if start < 0:
            break
        end = _balanced_block(raw, start)
        if end is None:
            pos = start + 1
            continue
        candidates.append(raw[start:end])
        pos = end
    for candidate in candidates:
        try:
            if isinstance(json.loads(candidate), dict):
                return candidate
        except (json.JSONDecodeError, RecursionError):
            continue
    if candidates:
        return candidates[0]
    raise NoStructuredBlock("no balanced object in response")


def _normalized_with_map(text: str) -> tuple[str, list[int]]:
    """Casefolded, whitespace-collapsed text plus normalized->original index map."""
    chars: list[str] = []
    index_map: list[int] = []
    pending_space_at: int | None = None
    for i, ch in enumerate(text):
        if ch.isspace():
            if chars and pending_space_at is None:
                pending_space_at = i
            continue
        if pending_space_at is not None:
            chars.append(" ")
            index_map.append(pending_space_at)
            pending_space_at = None
        for folded in ch.lower():
            chars.append(folded)
            index_map.append(i)
    return "".join(chars), index_map


def _repair_locate(review_text: str, trigger_text: str) -> TriggerSpan | None:
    """Relocate a trigger ignoring case and whitespace differences."""
    normalized_trigger = " ".join(trigger_text.lower().split())
    if not normalized_trigger:
        return None
    normalized_review, index_map = _normalized_with_map(review_text)
    at = normalized_review.find(normalized_trigger)
    if at < 0:
        return None
    start = index_map[at]
    end = index_map[at + len(normalized_trigger) - 1] + 1
    return TriggerSpan(text=review_text[start:end], start=start, end=end)


def parse_output(raw: str, review: Review) -> ParseReport:
    """Parse one raw response against one review.

    All failures are recorded in the report, never raised: an
    unparseable response yields an empty output so it scores as a
    prediction with no pairs.
    """
    report = ParseReport(output=EotOutput(review.review_id, ()))
    try:
        block = extract_structured_block(raw)
        parsed = json.loads(block)
    except (NoStructuredBlock, json.JSONDecodeError, RecursionError, TypeError):
        report.parse_status = ParseStatus.UNPARSEABLE
        return report
    emotions = parsed.get("emotions") if isinstance(parsed, dict) else None
    if not isinstance(emotions, list):
        report.parse_status = ParseStatus.UNPARSEABLE
        return report

    merged: dict[EmotionLabel, list[TriggerSpan]] = {}
    for entry in emotions:
        if not isinstance(entry, dict) or not isinstance(entry.get("emotion"), str):
            report.dropped_emotions.append(DroppedEmotion(repr(entry)[:120], REASON_MALFORMED))
            continue
        try:
            label = canonical_emotion(entry["emotion"])
        except UnknownEmotion:
            report.dropped_emotions.append(DroppedEmotion(entry["emotion"], REASON_OOV))
            continue
        triggers = entry.get("triggers", [])
        if not isinstance(triggers, list):
            report.dropped_triggers.append(
                DroppedTrigger(label.value, repr(triggers)[:120], REASON_MALFORMED)
            )
            triggers = []
        spans = merged.setdefault(label, [])
        for trigger in triggers:
            if not isinstance(trigger, str):
                report.dropped_triggers.append(
                    DroppedTrigger(label.value, repr(trigger)[:120], REASON_MALFORMED)
                )
                continue
            if label is EmotionLabel.NEUTRAL:
                report.dropped_triggers.append(
                    DroppedTrigger(label.value, trigger, REASON_NEUTRAL_TRIGGER)
                )
                continue
            try:
                span = locate_span(review.text, trigger)
            except SpanNotFound:
                span = _repair_locate(review.text, trigger)
                if span is None:
                    report.dropped_triggers.append(
                        DroppedTrigger(label.value, trigger, REASON_NOT_EXTRACTIVE)
                    )
                    continue
                report.repair_applied = True
            if not any(s.start == span.start and s.end == span.end for s in spans):
                spans.append(span)

    survivors: list[tuple[EmotionLabel, list[TriggerSpan]]] = []
    neutral_seen = EmotionLabel.NEUTRAL in merged
    for label, spans in merged.items():
        if label is EmotionLabel.NEUTRAL:
            continue
        if spans:
            survivors.append((label, spans))
        else:
            report.dropped_emotions.append(
                DroppedEmotion(label.value, REASON_NO_VERIFIABLE_TRIGGER)
            )
    if neutral_seen:
        if survivors:
            report.dropped_emotions.append(
                DroppedEmotion(EmotionLabel.NEUTRAL.value, REASON_NEUTRAL_WITH_OTHERS)
            )
        else:
            survivors = [(EmotionLabel.NEUTRAL, [])]

    report.output = EotOutput(
        review.review_id,
        tuple(EmotionTriggers(label, tuple(spans)) for label, spans in survivors),
    )
    report.parse_status = ParseStatus.REPAIRED if report.repair_applied else ParseStatus.CLEAN
    return report


def parse_report_to_dict(report: ParseReport) -> dict[str, Any]:
    """Line-record form of a parse report (annotation shape + parse_status)."""
    return {
        "review_id": report.output.review_id,
        "emotions": [
            {"emotion": p.emotion.value, "triggers": [s.text for s in p.triggers]}
            for p in report.output.pairs
        ],
        "parse_status": report.parse_status.value,
        "repair_applied": report.repair_applied,
        "dropped_triggers": [
            {"emotion": d.emotion, "text": d.text, "reason": d.reason}
            for d in report.dropped_triggers
        ],
        "dropped_emotions": [
            {"label": d.label, "reason": d.reason} for d in report.dropped_emotions
        ],
    }
