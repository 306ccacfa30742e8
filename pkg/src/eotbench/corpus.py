"""Corpus loading, the review-length filter, and seeded sampling.

Sampling is reproducible byte-for-byte: simple random sampling without
replacement (SRSWOR) runs a partial Fisher-Yates shuffle over its own
``random.Random`` instance, and every per-item, per-stratum draw derives
its seed from (plan seed, item id, stratum key), so adding one item never
perturbs another item's sample.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from fractions import Fraction
from pathlib import Path
from random import Random
from typing import Any, Sequence, TypeVar

from .errors import EmptyCorpus, InsufficientReviews, SampleTooLarge
from .jsonio import iter_jsonl_lines
from .model import DOMAIN_SOURCE, Domain, Review, Source, tokenize

T = TypeVar("T")

FORMAT_VERSION = "1"


class StrataGranularity(Enum):
    YEAR = "Year"
    QUARTER = "Quarter"


UNKNOWN_STRATUM = "unknown"


@dataclass(frozen=True)
class SamplingPlan:
    seed: int
    items_per_group: int
    reviews_per_item: int
    min_tokens: int
    max_tokens: int
    strata_granularity: StrataGranularity = StrataGranularity.YEAR

    def __post_init__(self):
        if not (0 < self.min_tokens <= self.max_tokens):
            raise ValueError("need 0 < min_tokens <= max_tokens")
        if self.items_per_group < 1 or self.reviews_per_item < 1:
            raise ValueError("items_per_group and reviews_per_item must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "items_per_group": self.items_per_group,
            "reviews_per_item": self.reviews_per_item,
            "min_tokens": self.min_tokens,
            "max_tokens": self.max_tokens,
            "strata_granularity": self.strata_granularity.value,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SamplingPlan":
        return cls(
            seed=int(data["seed"]),
            items_per_group=int(data["items_per_group"]),
            reviews_per_item=int(data["reviews_per_item"]),
            min_tokens=int(data["min_tokens"]),
            max_tokens=int(data["max_tokens"]),
            strata_granularity=StrataGranularity(data.get("strata_granularity", "Year")),
        )


@dataclass(frozen=True)
class RejectedLine:
    line_no: int
    reason: str


@dataclass
class CorpusFile:
    """Loaded corpus plus the rejection report for malformed lines.

    ``source`` is derived from the record domains; None means the file
    mixes sources (legal for merged sample files).
    """

    records: list[Review]
    source: Source | None
    rejections: list[RejectedLine] = field(default_factory=list)


def _parse_review_line(obj: Any, seen_ids: set[str]) -> Review:
    if not isinstance(obj, dict):
        raise ValueError("record is not an object")
    review_id = obj.get("review_id")
    if not isinstance(review_id, str) or not review_id:
        raise ValueError("missing or empty review_id")
    if review_id in seen_ids:
        raise ValueError(f"duplicate review_id {review_id!r}")
    text = obj.get("text")
    if not isinstance(text, str) or not text.strip():
        raise ValueError("missing or empty text")
    try:
        domain = Domain(obj.get("domain"))
    except ValueError:
        raise ValueError(f"unknown domain {obj.get('domain')!r}") from None
    item_id = obj.get("item_id")
    if not isinstance(item_id, str) or not item_id:
        raise ValueError("missing or empty item_id")
    timestamp = obj.get("timestamp")
    if timestamp is not None and (isinstance(timestamp, bool) or not isinstance(timestamp, int)):
        raise ValueError("timestamp must be an integer (epoch seconds)")
    return Review(review_id=review_id, text=text, domain=domain, item_id=item_id, timestamp=timestamp)


def load_corpus(path: Path | str) -> CorpusFile:
    """Load a line-delimited review file.

    Well-formed records load; malformed lines are collected into
    ``rejections`` with their line numbers. EmptyCorpus is raised when
    nothing usable remains.
    """
    records: list[Review] = []
    rejections: list[RejectedLine] = []
    seen_ids: set[str] = set()
    for line_no, line in iter_jsonl_lines(path):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            rejections.append(RejectedLine(line_no, f"invalid JSON: {exc.msg}"))
            continue
        try:
            review = _parse_review_line(obj, seen_ids)
        except ValueError as exc:
            rejections.append(RejectedLine(line_no, str(exc)))
            continue
        seen_ids.add(review.review_id)
        records.append(review)
    if not records:
        raise EmptyCorpus(path)
    sources = {DOMAIN_SOURCE[r.domain] for r in records}
    return CorpusFile(records=records, source=sources.pop() if len(sources) == 1 else None, rejections=rejections)


def review_to_dict(review: Review) -> dict[str, Any]:
    out: dict[str, Any] = {
        "review_id": review.review_id,
        "text": review.text,
        "domain": review.domain.value,
        "item_id": review.item_id,
    }
    if review.timestamp is not None:
        out["timestamp"] = review.timestamp
    out["format_version"] = FORMAT_VERSION
    return out


def filter_by_length(reviews: Sequence[Review], plan: SamplingPlan) -> list[Review]:
    """Keep reviews whose token count lies in [min_tokens, max_tokens]."""
    return [
        r for r in reviews if plan.min_tokens <= len(tokenize(r.text)) <= plan.max_tokens
    ]


def derive_seed(*parts: Any) -> int:
    """Stable 64-bit seed from arbitrary parts (hash-based, not salted)."""
    digest = hashlib.sha256("\x1f".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def srswor(population: Sequence[T], n: int, seed: int) -> list[T]:
    """Simple random sampling without replacement, in selection order.

    Partial Fisher-Yates over a seeded generator: deterministic for a
    fixed (population order, n, seed) and uniform over size-n subsets.
    """
    if n > len(population):
        raise SampleTooLarge(n, len(population))
    rng = Random(seed)
    pool = list(population)
    for i in range(n):
        j = rng.randrange(i, len(pool))
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:n]


def stratum_key(review: Review, granularity: StrataGranularity) -> str:
    if review.timestamp is None:
        return UNKNOWN_STRATUM
    moment = datetime.fromtimestamp(review.timestamp, tz=timezone.utc)
    if granularity is StrataGranularity.YEAR:
        return str(moment.year)
    return f"{moment.year}-Q{(moment.month - 1) // 3 + 1}"


def allocate_proportional(sizes: Sequence[int], total: int) -> list[int]:
    """Largest-remainder allocation of ``total`` slots, ties to earlier strata.

    Quotas are exact rationals so equal remainders really tie.
    """
    grand = sum(sizes)
    quotas = [Fraction(total * s, grand) for s in sizes]
    counts = [int(q) for q in quotas]
    leftover = total - sum(counts)
    by_remainder = sorted(range(len(sizes)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in by_remainder[:leftover]:
        counts[i] += 1
    return counts


def _strata_in_order(
    reviews: Sequence[Review], granularity: StrataGranularity
) -> list[tuple[str, list[Review]]]:
    groups: dict[str, list[Review]] = {}
    for review in reviews:
        groups.setdefault(stratum_key(review, granularity), []).append(review)
    # chronological order, the unknown stratum last
    return sorted(groups.items(), key=lambda kv: (kv[0] == UNKNOWN_STRATUM, kv[0]))


def stratified_review_sample(reviews_of_item: Sequence[Review], plan: SamplingPlan) -> list[Review]:
    """Sample ``reviews_per_item`` reviews, allocated proportionally to time strata."""
    m = plan.reviews_per_item
    item_id = reviews_of_item[0].item_id if reviews_of_item else "?"
    if len(reviews_of_item) < m:
        raise InsufficientReviews(item_id, len(reviews_of_item), m)
    strata = _strata_in_order(reviews_of_item, plan.strata_granularity)
    counts = allocate_proportional([len(rs) for _, rs in strata], m)
    sample: list[Review] = []
    for (key, stratum_reviews), k in zip(strata, counts):
        sample.extend(srswor(stratum_reviews, k, derive_seed(plan.seed, item_id, key)))
    return sample


def stratum_counts(reviews_of_item: Sequence[Review], plan: SamplingPlan) -> dict[str, int]:
    """Per-stratum population sizes, for the sampling manifest."""
    return {key: len(rs) for key, rs in _strata_in_order(reviews_of_item, plan.strata_granularity)}
