"""Text pipeline around the vision and planning models: prompt rendering,
comma parsing with length-based outlier rejection, plan validation with
retry, and the perception -> planning composition.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import (
    EmptyDetectionError,
    SchemaError,
    TemplateError,
    ValidationExhaustedError,
)
from .labels import normalize_label
from .scoring import PackingSequence

DEFAULT_PERCEPTION_TEMPLATE = (
    {
        "role": "system",
        "content": (
            "You are an intelligent AI, assisting a robot in packing a bag of "
            "groceries. As a first step, you need to identify the items in the "
            "image. Answer in a comma separated string. For example, if the "
            'image contains apples and bananas, you should answer "apples, bananas".'
        ),
    },
    {"role": "user", "content": "Which grocery items are on the image?"},
)

DEFAULT_PLANNING_TEMPLATE = (
    {
        "role": "system",
        "content": (
            "You are an intelligent AI, assisting a robot in packing a bag of "
            "groceries. You are provided with a list of grocery items. The bag "
            "should be packed so that no item is damaged. Answer in a comma "
            "separated string. The first item on the list is loaded first and "
            "is thus the lowest in the bag. For example, if the list contains "
            "bricks and eggs, you should answer 'bricks, eggs'."
        ),
    },
    {"role": "user", "content": "How should the following items be loaded? {item_list}"},
)


@dataclass(frozen=True)
class PromptTemplate:
    """Role-tagged message templates; {item_list} is the only placeholder."""

    messages: tuple[dict, ...]

    def render(self, **bindings) -> list[dict]:
        rendered = []
        for msg in self.messages:
            try:
                content = msg["content"].format(**bindings)
            except (KeyError, IndexError) as exc:
                raise TemplateError(f"unbound placeholder in template: {exc}") from exc
            if not content:
                raise TemplateError("template rendered to an empty message")
            out = dict(msg)
            out["content"] = content
            rendered.append(out)
        return rendered


@dataclass(frozen=True)
class Templates:
    perception: PromptTemplate = PromptTemplate(DEFAULT_PERCEPTION_TEMPLATE)
    planning: PromptTemplate = PromptTemplate(DEFAULT_PLANNING_TEMPLATE)


def load_templates(path) -> Templates:
    """Load perception/planning templates from a JSON config file."""
    with open(path, encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: {exc}") from exc
    out = {}
    for name in ("perception", "planning"):
        if name not in doc:
            continue
        messages = doc[name]
        if not isinstance(messages, list) or not all(
            isinstance(m, dict) and "role" in m and "content" in m for m in messages
        ):
            raise SchemaError(f"{path}: template {name!r} must be a list of role/content messages")
        out[name] = PromptTemplate(tuple(messages))
    return Templates(**out)


@dataclass(frozen=True)
class ReferenceLexicon:
    """Common grocery labels used to calibrate the label-length outlier filter."""

    entries: tuple[str, ...]
    sigma: float = field(init=False)

    def __post_init__(self):
        if len(self.entries) < 2:
            raise SchemaError("reference lexicon needs at least 2 entries")
        lengths = [len(e) for e in self.entries]
        mean = sum(lengths) / len(lengths)
        sigma = math.sqrt(sum((x - mean) ** 2 for x in lengths) / len(lengths))
        if sigma <= 0:
            raise SchemaError("reference lexicon entry lengths have zero spread")
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def from_file(cls, path) -> "ReferenceLexicon":
        with open(path, encoding="utf-8") as f:
            entries = [normalize_label(line) for line in f if line.strip()]
        return cls(tuple(entries))


@dataclass(frozen=True)
class ValidationPolicy:
    match_threshold: float = 0.30
    max_attempts: int = 3
    outlier_multiplier: float = 6.0

    def __post_init__(self):
        if not 0 < self.match_threshold <= 1:
            raise SchemaError(f"match_threshold must be in (0, 1], got {self.match_threshold}")
        if self.max_attempts < 1:
            raise SchemaError(f"max_attempts must be >= 1, got {self.max_attempts}")
        if self.outlier_multiplier <= 0:
            raise SchemaError(f"outlier_multiplier must be > 0, got {self.outlier_multiplier}")


def parse_detection(raw: str, lex: ReferenceLexicon, policy: ValidationPolicy = ValidationPolicy()) -> list[str]:
    """Split a detection response at commas and drop length outliers.

    Fragments longer than outlier_multiplier * lexicon sigma are removed
    (strictly greater; a fragment exactly at the bound survives). Order and
    duplicates are preserved; deduplication happens downstream.
    """
    cutoff = policy.outlier_multiplier * lex.sigma
    labels = []
    for fragment in raw.split(","):
        fragment = fragment.strip()
        if not fragment:
            continue
        label = normalize_label(fragment)
        if len(label) > cutoff:
            continue
        labels.append(label)
    if not labels:
        raise EmptyDetectionError(f"no usable labels parsed from response: {raw!r}")
    return labels


def render_planning_prompt(items, template: PromptTemplate | None = None) -> list[dict]:
    """Fill the planning template with a comma-plus-space joined item list."""
    if not items:
        raise TemplateError("planning prompt needs at least one item")
    template = template or PromptTemplate(DEFAULT_PLANNING_TEMPLATE)
    return template.render(item_list=", ".join(items))


def _appears(detected: str, candidate_items) -> bool:
    return any(detected in c or c in detected for c in candidate_items)


def validate_plan(detected, response: str, policy: ValidationPolicy = ValidationPolicy()) -> PackingSequence | None:
    """Check a planning response against the detected items.

    Returns the parsed sequence when strictly more than match_threshold of
    the detected items appear in it (normalized bidirectional substring
    containment), None as the retry signal otherwise.
    """
    if not detected:
        raise SchemaError("validate_plan needs a non-empty detected list")
    candidate = []
    for fragment in response.split(","):
        fragment = fragment.strip()
        if fragment:
            candidate.append(normalize_label(fragment))
    if not candidate:
        return None
    appearing = sum(1 for d in detected if _appears(d, candidate))
    if appearing / len(detected) > policy.match_threshold:
        return PackingSequence(tuple(candidate))
    return None


@dataclass(frozen=True)
class PipelineResult:
    scene_id: str
    detected: tuple[str, ...]
    planned: PackingSequence
    attempts: int
    transcripts: tuple[dict, ...]


def run_pipeline(
    scene_id: str,
    provider,
    templates: Templates,
    lex: ReferenceLexicon,
    policy: ValidationPolicy = ValidationPolicy(),
    image: dict | None = None,
) -> PipelineResult:
    """Perception call, parse, dedup, then planning calls with retry.

    `provider` is anything with complete(messages) -> ChatExchange. An image
    payload, when given, is attached to the perception user message as an
    opaque {data, media_type} attachment.
    """
    perception_messages = templates.perception.render()
    if image is not None:
        perception_messages[-1] = dict(perception_messages[-1], image=image)
    transcripts = []

    exchange = provider.complete(perception_messages)
    transcripts.append({"step": "perception", "messages": perception_messages, "response": exchange.response})
    raw_detected = parse_detection(exchange.response, lex, policy)
    detected = tuple(dict.fromkeys(raw_detected))

    planning_messages = render_planning_prompt(list(detected), templates.planning)
    last_response = ""
    for attempt in range(1, policy.max_attempts + 1):
        exchange = provider.complete(planning_messages)
        last_response = exchange.response
        transcripts.append({"step": "planning", "attempt": attempt, "messages": planning_messages, "response": exchange.response})
        planned = validate_plan(detected, exchange.response, policy)
        if planned is not None:
            return PipelineResult(scene_id, detected, planned, attempt, tuple(transcripts))
    raise ValidationExhaustedError(
        f"scene {scene_id!r}: planning validation failed on all {policy.max_attempts} attempts",
        last_response=last_response,
    )
