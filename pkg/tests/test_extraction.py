from __future__ import annotations

import json
import random

import pytest

from eotbench.errors import NoStructuredBlock
from eotbench.extraction import (
    ParseStatus,
    REASON_NEUTRAL_WITH_OTHERS,
    REASON_NOT_EXTRACTIVE,
    REASON_NO_VERIFIABLE_TRIGGER,
    REASON_OOV,
    extract_structured_block,
    parse_output,
)
from eotbench.model import EmotionLabel
from conftest import make_review


def response(emotions: list[dict]) -> str:
    return json.dumps({"emotions": emotions})


class TestExtractStructuredBlock:
    def test_bare_object(self):
        raw = '{"emotions": []}'
        assert extract_structured_block(raw) == raw

    def test_fenced_with_prose(self):
        inner = '{"emotions": [{"emotion": "Joy", "triggers": ["nice"]}]}'
        raw = f"Here is my analysis:\n```json\n{inner}\n```\nHope this helps."
        assert extract_structured_block(raw) == inner

    def test_pure_prose(self):
        with pytest.raises(NoStructuredBlock):
            extract_structured_block("The reviewer sounds upset about the delivery.")

    def test_braces_inside_strings_do_not_break_balance(self):
        inner = '{"emotions": [{"emotion": "Joy", "triggers": ["a } b"]}]}'
        assert extract_structured_block("x " + inner + " y") == inner

    def test_prefers_first_parseable_object(self):
        inner = '{"emotions": []}'
        raw = "{broken json} and then " + inner
        assert extract_structured_block(raw) == inner


class TestParseOutput:
    def test_clean_parse(self, sample_review):
        report = parse_output(
            response([{"emotion": "Joy", "triggers": ["works perfectly"]}]), sample_review
        )
        assert report.parse_status is ParseStatus.CLEAN
        assert not report.repair_applied
        [pair] = report.output.pairs
        assert pair.emotion is EmotionLabel.JOY
        assert [s.text for s in pair.triggers] == ["works perfectly"]
        report.output.validate_against(sample_review.text)

    def test_whitespace_repair(self):
        review = make_review(text="Non slip, great arch support")
        report = parse_output(
            response([{"emotion": "Joy", "triggers": ["Non  slip, great arch support"]}]), review
        )
        assert report.parse_status is ParseStatus.REPAIRED
        assert report.repair_applied
        [pair] = report.output.pairs
        assert pair.triggers[0].text == "Non slip, great arch support"
        report.output.validate_against(review.text)

    def test_case_repair_recovers_original_case(self):
        review = make_review(text="LOVE the fit and the color")
        report = parse_output(
            response([{"emotion": "Joy", "triggers": ["love the fit"]}]), review
        )
        assert report.repair_applied
        assert report.output.pairs[0].triggers[0].text == "LOVE the fit"

    def test_non_extractive_trigger_dropped_then_emotion_dropped(self, sample_review):
        report = parse_output(
            response([{"emotion": "Joy", "triggers": ["amazing quality!!!"]}]), sample_review
        )
        assert report.output.pairs == ()
        assert [d.reason for d in report.dropped_triggers] == [REASON_NOT_EXTRACTIVE]
        assert [d.reason for d in report.dropped_emotions] == [REASON_NO_VERIFIABLE_TRIGGER]

    def test_oov_emotion_dropped(self, sample_review):
        report = parse_output(
            response(
                [
                    {"emotion": "happiness", "triggers": ["works perfectly"]},
                    {"emotion": "Joy", "triggers": ["works perfectly"]},
                ]
            ),
            sample_review,
        )
        assert report.output.emotions == {EmotionLabel.JOY}
        assert [d.reason for d in report.dropped_emotions] == [REASON_OOV]

    def test_neutral_dropped_when_others_survive(self, sample_review):
        report = parse_output(
            response(
                [
                    {"emotion": "Neutral", "triggers": []},
                    {"emotion": "Joy", "triggers": ["works perfectly"]},
                ]
            ),
            sample_review,
        )
        assert report.output.emotions == {EmotionLabel.JOY}
        assert any(d.reason == REASON_NEUTRAL_WITH_OTHERS for d in report.dropped_emotions)

    def test_neutral_survives_alone(self, sample_review):
        report = parse_output(response([{"emotion": "Neutral", "triggers": []}]), sample_review)
        assert report.output.emotions == {EmotionLabel.NEUTRAL}

    def test_neutral_kept_when_other_emotions_lose_their_triggers(self, sample_review):
        report = parse_output(
            response(
                [
                    {"emotion": "Neutral", "triggers": []},
                    {"emotion": "Joy", "triggers": ["not in the review at all"]},
                ]
            ),
            sample_review,
        )
        assert report.output.emotions == {EmotionLabel.NEUTRAL}

    def test_duplicate_emotions_merged(self, sample_review):
        report = parse_output(
            response(
                [
                    {"emotion": "Joy", "triggers": ["works perfectly"]},
                    {"emotion": "JOY", "triggers": ["arrived two days early", "works perfectly"]},
                ]
            ),
            sample_review,
        )
        [pair] = report.output.pairs
        assert [s.text for s in pair.triggers] == ["works perfectly", "arrived two days early"]

    def test_unparseable_prose(self, sample_review):
        report = parse_output("It mostly expresses joy about the blender.", sample_review)
        assert report.parse_status is ParseStatus.UNPARSEABLE
        assert report.output.pairs == ()

    def test_wrong_schema_is_unparseable(self, sample_review):
        report = parse_output('{"labels": ["Joy"]}', sample_review)
        assert report.parse_status is ParseStatus.UNPARSEABLE

    def test_malformed_entries_skipped(self, sample_review):
        report = parse_output(
            response(["what", {"emotion": 3}, {"emotion": "Joy", "triggers": ["works perfectly"]}]),
            sample_review,
        )
        assert report.output.emotions == {EmotionLabel.JOY}
        assert len(report.dropped_emotions) == 2


class TestFuzz:
    def test_never_crashes_on_random_byte_strings(self, sample_review):
        rng = random.Random(20240811)
        for _ in range(10_000):
            length = rng.randrange(0, 60)
            raw = bytes(rng.randrange(256) for _ in range(length)).decode("latin-1")
            report = parse_output(raw, sample_review)
            report.output.validate_against(sample_review.text)

    def test_mutated_triggers_never_accepted_unverified(self):
        review = make_review(
            text="The zipper broke on day two but the fabric still feels soft and warm."
        )
        rng = random.Random(7)
        alphabet = "abcdef XY!,"
        emotions = [e.value for e in EmotionLabel if e is not EmotionLabel.NEUTRAL]
        for _ in range(1_000):
            start = rng.randrange(0, len(review.text) - 2)
            end = rng.randrange(start + 1, len(review.text))
            trigger = review.text[start:end]
            # random edit: insert, delete, or replace a character
            op = rng.randrange(3)
            pos = rng.randrange(len(trigger))
            if op == 0:
                trigger = trigger[:pos] + rng.choice(alphabet) + trigger[pos:]
            elif op == 1:
                trigger = trigger[:pos] + trigger[pos + 1 :]
            else:
                trigger = trigger[:pos] + rng.choice(alphabet) + trigger[pos + 1 :]
            raw = response([{"emotion": rng.choice(emotions), "triggers": [trigger]}])
            report = parse_output(raw, review)
            report.output.validate_against(review.text)
