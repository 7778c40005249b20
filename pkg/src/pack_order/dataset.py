"""Loaders for scene ground truth, survey corpora, lexicons and alias
tables, plus a synthetic survey generator for testing.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

from .errors import SchemaError
from .labels import normalize_label
from .preference import SurveyCorpus, SurveySequence, normalize_corpus


@dataclass(frozen=True)
class SceneRecord:
    scene_id: str
    scene_size: int
    ground_truth: tuple[str, ...]
    image: str = ""


@dataclass(frozen=True)
class SceneSet:
    scenes: tuple[SceneRecord, ...]
    catalog: tuple[str, ...]
    size_range: tuple[int, int]


def _load_json(path):
    with open(path, encoding="utf-8") as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: {exc}") from exc


def load_scene_set(path, enforce_catalog: bool = True) -> SceneSet:
    """Load and validate a scene-set file.

    When the file carries a catalog and enforce_catalog is set, every
    ground-truth label must resolve into it (open-vocabulary predictions
    are still allowed downstream; only ground truth is checked here).
    """
    doc = _load_json(path)
    try:
        catalog = tuple(normalize_label(c) for c in doc.get("catalog", []))
        lo, hi = doc["size_range"]
        raw_scenes = doc["scenes"]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: malformed scene set: {exc}") from exc
    if lo > hi or lo < 1:
        raise SchemaError(f"{path}: invalid size_range [{lo}, {hi}]")

    scenes = []
    seen_ids = set()
    for i, raw in enumerate(raw_scenes):
        try:
            scene_id = str(raw["id"])
            size = int(raw["size"])
            truth = tuple(normalize_label(x) for x in raw["ground_truth"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"{path}: scene {i}: {exc}") from exc
        if scene_id in seen_ids:
            raise SchemaError(f"{path}: duplicate scene id {scene_id!r}")
        seen_ids.add(scene_id)
        if size != len(truth):
            raise SchemaError(
                f"{path}: scene {scene_id!r} declares size {size} but lists {len(truth)} labels"
            )
        if not lo <= size <= hi:
            raise SchemaError(
                f"{path}: scene {scene_id!r} size {size} outside declared range [{lo}, {hi}]"
            )
        if enforce_catalog and catalog:
            unknown = [t for t in truth if t not in catalog]
            if unknown:
                raise SchemaError(
                    f"{path}: scene {scene_id!r} has labels not in catalog: {unknown}"
                )
        scenes.append(SceneRecord(scene_id, size, truth, str(raw.get("image", ""))))
    return SceneSet(tuple(scenes), catalog, (lo, hi))


def load_survey(path) -> SurveyCorpus:
    """Load a survey file and normalize it to the bottom-first convention."""
    doc = _load_json(path)
    try:
        direction = doc["direction"]
        sequences = tuple(
            SurveySequence(str(s["participant"]), tuple(s["items"]))
            for s in doc["sequences"]
        )
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"{path}: malformed survey: {exc}") from exc
    return normalize_corpus(SurveyCorpus(sequences, direction))


def save_survey(corpus: SurveyCorpus, path) -> None:
    doc = {
        "direction": corpus.direction,
        "sequences": [
            {"participant": s.participant, "items": list(s.items)} for s in corpus.sequences
        ],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def load_aliases(path) -> dict[str, str]:
    """Alias file: JSON object mapping free-form label -> canonical class."""
    doc = _load_json(path)
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: alias file must be a JSON object")
    return {normalize_label(k): normalize_label(v) for k, v in doc.items()}


def synth_corpus(
    catalog,
    true_order,
    noise: float,
    participants: int,
    seed: int | None = None,
) -> SurveyCorpus:
    """Generate a bottom-first survey corpus around a known total order.

    Each participant orders a random subset of the catalog; the true order's
    restriction is perturbed by one pass of independent adjacent
    transpositions with probability `noise`. Deterministic given the seed.
    """
    if not 0 <= noise <= 0.5:
        raise SchemaError(f"noise must be in [0, 0.5], got {noise}")
    order = [normalize_label(c) for c in true_order]
    classes = [normalize_label(c) for c in catalog]
    if sorted(order) != sorted(set(order)) or set(order) != set(classes):
        raise SchemaError("true_order must be a permutation of the catalog")
    rng = random.Random(seed)
    rank = {c: i for i, c in enumerate(order)}

    sequences = []
    for p in range(participants):
        size = rng.randint(2, len(classes))
        subset = rng.sample(classes, size)
        items = sorted(subset, key=rank.__getitem__)
        for i in range(len(items) - 1):
            if rng.random() < noise:
                items[i], items[i + 1] = items[i + 1], items[i]
        sequences.append(SurveySequence(f"p{p:03d}", tuple(items)))
    return SurveyCorpus(tuple(sequences), "bottom_first")
