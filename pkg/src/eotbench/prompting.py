"""Prompt construction for the three strategies: zs, zs-cot, eot-detect.

Template wording is a versioned artifact: PROMPT_VERSION is recorded in
run manifests and the rendered text of each strategy is pinned by golden
snapshot tests. The structured strategy decomposes into a system
message, a task description, five ordered instruction steps ending in a
four-condition self-check, and the review block; the other two carry the
task description and review only.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path
from typing import Any

from .model import Review

PROMPT_VERSION = "1.0.0"

EMOTION_MENU = "Joy, Trust, Fear, Surprise, Sadness, Disgust, Anger, Anticipation"


class Strategy(Enum):
    ZS = "zs"
    ZS_COT = "zs-cot"
    EOT_DETECT = "eot-detect"


OUTPUT_SCHEMA_LINE = (
    '{"emotions": [{"emotion": "<label>", "triggers": ["<exact substring of the review>"]}]}'
)

OUTPUT_CONTRACT = (
    "Respond with a single JSON object and nothing else, in exactly this format:\n"
    f"{OUTPUT_SCHEMA_LINE}\n"
    f'Each "emotion" must be one of: {EMOTION_MENU}, Neutral. '
    'If the review expresses no discernible emotion, respond with '
    '{"emotions": [{"emotion": "Neutral", "triggers": []}]}.'
)

OUTPUT_CONTRACT_AFTER_REASONING = (
    "After your reasoning, finish your response with a single JSON object in exactly this format:\n"
    f"{OUTPUT_SCHEMA_LINE}\n"
    f'Each "emotion" must be one of: {EMOTION_MENU}, Neutral. '
    'If the review expresses no discernible emotion, the object is '
    '{"emotions": [{"emotion": "Neutral", "triggers": []}]}. '
    "Do not write anything after the JSON object."
)

ZS_TASK = (
    "Analyze the customer review below. Identify every emotion the reviewer expresses, "
    f"choosing only from: {EMOTION_MENU}. For each identified emotion, extract its opinion "
    "triggers: the exact, unmodified text spans from the review that explain why that emotion "
    "is present. Opinion triggers must be exact substrings of the review, copied verbatim. "
    "A review may express several emotions, and one emotion may have several triggers. "
    "If no discernible emotion is expressed, label the review Neutral with no triggers."
)

ZS_COT_DIRECTIVE = (
    "Let's think step-by-step. Before giving the final answer, write out your reasoning: "
    "work through the review, noting each emotional signal and the exact wording that causes "
    "it. Generate the reasoning first, then the final answer."
)

EOT_SYSTEM_MESSAGE = (
    "You are an expert emotion analyst specializing in customer reviews. You identify the "
    "emotions a reviewer expresses and the exact wording that triggers them, and you follow "
    "the given instructions precisely."
)

EOT_TASK = (
    "Task Definition: Detect the emotions expressed in the customer review below and extract "
    "the opinion triggers for each detected emotion directly from the review text.\n\n"
    "Opinion Trigger Definition: An opinion trigger is a contiguous text span that explains "
    "why an emotion is present. Triggers must be exact substrings of the review, copied "
    "verbatim.\n\n"
    f"Emotion Scope: Consider only these eight emotions: {EMOTION_MENU}. If none of them is "
    "expressed, label the review as Neutral.\n\n"
    "Guidelines: Copy trigger text with no modifications. Multiple emotions are possible in "
    "one review, and a single emotion may have multiple triggers. Stay faithful to the review "
    "text and do not add emotions that are not expressed."
)

EOT_INSTRUCTIONS = (
    "Focus on Key Emotions: Read the review carefully and identify every emotion it "
    "expresses, or Neutral if none is found.",
    "Link Emotions to Opinion Triggers: For each identified emotion, extract one or more "
    "text spans from the review that explain why the emotion is present.",
    "Maintain Balance: Capture both majority and minority emotions, so that no emotion is "
    "over- or underrepresented.",
    "Keep it Clear: Finalize the detected emotions and their triggers, keeping every trigger "
    "strictly extractive.",
    "Final Self-Check: Before answering, verify Emotion Coverage (every expressed emotion is "
    "captured, including minority ones), Trigger Coverage (all relevant triggers for each "
    "emotion are extracted), Emotion Faithfulness (no extra or unwarranted emotions are "
    "added), and Opinion Trigger Verifiability (every trigger is exactly a substring of the "
    "review).",
)


@dataclass(frozen=True)
class PromptSpec:
    """A rendered prompt, decomposable into its structured components."""

    system_message: str
    task_description: str
    instructions: tuple[str, ...]
    review_block: str
    output_contract: str
    strategy: Strategy

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))
        if self.strategy is Strategy.EOT_DETECT and len(self.instructions) != 5:
            raise ValueError("the structured strategy requires exactly 5 instruction steps")
        if self.strategy is not Strategy.EOT_DETECT and self.instructions:
            raise ValueError("only the structured strategy carries instruction steps")


@dataclass(frozen=True)
class InferenceConfig:
    temperature: float = 0.2
    top_p: float = 0.95
    top_k: int = 25
    max_tokens: int = 2500
    n: int = 1

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not (0 < self.top_p <= 1):
            raise ValueError("top_p must be in (0, 1]")
        if self.top_k < 1 or self.max_tokens < 1 or self.n < 1:
            raise ValueError("top_k, max_tokens and n must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "InferenceConfig":
        return cls(**{k: data[k] for k in ("temperature", "top_p", "top_k", "max_tokens", "n") if k in data})

    def to_file(self, path: Path | str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def from_file(cls, path: Path | str) -> "InferenceConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def default_config() -> InferenceConfig:
    """The standardized sampling configuration used across providers."""
    return InferenceConfig(temperature=0.2, top_p=0.95, top_k=25, max_tokens=2500, n=1)


def build_prompt(strategy: Strategy, review: Review) -> PromptSpec:
    """Construct the prompt for one review under one strategy.

    Deterministic: the same (strategy, review) always yields the same
    spec, and the review text appears verbatim in the review block.
    """
    review_block = f"Review:\n{review.text}"
    if strategy is Strategy.ZS:
        return PromptSpec("", ZS_TASK, (), review_block, OUTPUT_CONTRACT, strategy)
    if strategy is Strategy.ZS_COT:
        task = f"{ZS_TASK}\n\n{ZS_COT_DIRECTIVE}"
        return PromptSpec("", task, (), review_block, OUTPUT_CONTRACT_AFTER_REASONING, strategy)
    return PromptSpec(
        EOT_SYSTEM_MESSAGE, EOT_TASK, EOT_INSTRUCTIONS, review_block, OUTPUT_CONTRACT, strategy
    )


def render_messages(spec: PromptSpec) -> list[tuple[str, str]]:
    """Chat messages for a prompt spec, preserving the S, T, I, R order."""
    parts = [spec.task_description]
    if spec.instructions:
        parts.append(
            "Instructions:\n"
            + "\n".join(f"{i}. {step}" for i, step in enumerate(spec.instructions, start=1))
        )
    parts.append(spec.review_block)
    parts.append(spec.output_contract)
    user_content = "\n\n".join(parts)
    if spec.system_message:
        return [("system", spec.system_message), ("user", user_content)]
    return [("user", user_content)]
