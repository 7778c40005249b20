"""Detection and planning evaluation: per-class F1, aggregate scores,
success rates, and assembly of the full evaluation report document.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

from .errors import EvaluationError
from .labels import plural_variants, resolve_label
from .preference import PreferenceMatrix, serialize_matrix
from .scoring import PackingSequence, constraint_satisfaction_rate, score
from .textpipe import PipelineResult, _appears


@dataclass
class Tally:
    tp: int = 0
    fp: int = 0
    fn: int = 0


def match_labels(predicted, truth, aliases: dict[str, str] | None = None) -> dict[str, Tally]:
    """Set-based per-scene matching of predicted labels against ground truth.

    Labels resolve through the alias table and compare after naive plural
    stripping; duplicates collapse to presence. Unresolvable predictions
    become false positives under their own normalized label.
    """
    truth_resolved = sorted({resolve_label(t, aliases) for t in truth})
    pred_resolved = sorted({resolve_label(p, aliases) for p in predicted})
    truth_variants = {t: plural_variants(t) for t in truth_resolved}
    pred_variants = {p: plural_variants(p) for p in pred_resolved}

    tallies: dict[str, Tally] = {}
    matched_preds = set()
    for cls, variants in truth_variants.items():
        tally = tallies.setdefault(cls, Tally())
        hits = [p for p, pv in pred_variants.items() if variants & pv]
        if hits:
            tally.tp += 1
            matched_preds.update(hits)
        else:
            tally.fn += 1
    for p in pred_resolved:
        if p not in matched_preds:
            tallies.setdefault(p, Tally()).fp += 1
    return tallies


def accumulate(total: dict[str, Tally], scene: dict[str, Tally]) -> None:
    for cls, tally in scene.items():
        agg = total.setdefault(cls, Tally())
        agg.tp += tally.tp
        agg.fp += tally.fp
        agg.fn += tally.fn


def f1_scores(tallies: dict[str, Tally]) -> dict:
    """Per-class precision/recall/F1 and their unweighted averages.

    Averages run over classes that appear in ground truth at least once
    (tp + fn > 0); classes with an empty denominator get P or R of 0.
    """
    per_class = {}
    in_truth = []
    for cls in sorted(tallies):
        t = tallies[cls]
        precision = t.tp / (t.tp + t.fp) if t.tp + t.fp else 0.0
        recall = t.tp / (t.tp + t.fn) if t.tp + t.fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[cls] = {"precision": precision, "recall": recall, "f1": f1,
                          "tp": t.tp, "fp": t.fp, "fn": t.fn}
        if t.tp + t.fn > 0:
            in_truth.append(cls)
    if not in_truth:
        raise EvaluationError("no ground-truth classes to evaluate")
    ap = sum(per_class[c]["precision"] for c in in_truth) / len(in_truth)
    ar = sum(per_class[c]["recall"] for c in in_truth) / len(in_truth)
    af1 = sum(per_class[c]["f1"] for c in in_truth) / len(in_truth)
    return {"per_class": per_class, "AP": ap, "AR": ar, "AF1": af1}


@dataclass
class SceneOutcome:
    """One scene's pipeline outcome plus derived metrics; result is None on failure."""

    scene_id: str
    scene_size: int
    truth: tuple[str, ...]
    result: PipelineResult | None
    error: str = ""
    t_frame: float = 0.0
    consistency: float | None = None
    satisfaction: float | None = None
    scored_items: tuple[str, ...] = ()


def success_rate(outcomes: list[SceneOutcome]) -> float:
    """Fraction of perception-detected items surviving into the accepted plan,
    averaged over scenes; validation-exhausted scenes contribute 0."""
    if not outcomes:
        raise EvaluationError("success rate needs at least one scene outcome")
    total = 0.0
    for out in outcomes:
        if out.result is None or not out.result.detected:
            continue
        planned = out.result.planned.items
        appearing = sum(1 for d in out.result.detected if _appears(d, planned))
        total += appearing / len(out.result.detected)
    return total / len(outcomes)


def success_rate_per_run(outcomes: list[SceneOutcome]) -> float:
    """Alternate reading: fraction of scenes with an accepted (parseable) plan."""
    if not outcomes:
        raise EvaluationError("success rate needs at least one scene outcome")
    return sum(1 for out in outcomes if out.result is not None) / len(outcomes)


def score_outcome(out: SceneOutcome, m: PreferenceMatrix, aliases: dict[str, str] | None = None) -> None:
    """Fill consistency and satisfaction for one outcome in place.

    Planned labels that do not resolve into the model catalog (hallucinations)
    are dropped from the scored sequence; with fewer than 2 scoreable distinct
    classes the metrics stay None.
    """
    if out.result is None:
        return
    resolved = []
    for label in out.result.planned.items:
        cls = resolve_label(label, aliases)
        if m.index_of(cls) is None:
            in_catalog = [v for v in sorted(plural_variants(cls)) if m.index_of(v) is not None]
            if not in_catalog:
                continue
            cls = in_catalog[0]
        resolved.append(cls)
    out.scored_items = tuple(resolved)
    if len(set(resolved)) < 2:
        return
    seq = PackingSequence(tuple(resolved))
    out.consistency = score(seq, m).value
    out.satisfaction = constraint_satisfaction_rate(seq, m)


def _mean_consistency(values: list[float]) -> tuple[float | None, int]:
    infinite = sum(1 for v in values if v == -math.inf)
    if not values:
        return None, 0
    if infinite:
        return -math.inf, infinite
    return sum(values) / len(values), 0


def _encode_score(value: float | None):
    if value is None:
        return None
    if value == -math.inf:
        return "-inf"
    return value


def _sha256_of(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


def assemble_report(
    outcomes: list[SceneOutcome],
    m: PreferenceMatrix,
    provenance: dict,
    aliases: dict[str, str] | None = None,
) -> dict:
    """Build the full evaluation report document from scored scene outcomes.

    Deterministic given its inputs; mock runs pass t_frame = 0 so the
    document is byte-stable across repeated runs.
    """
    if not outcomes:
        raise EvaluationError("report assembly needs at least one scene outcome")
    ids = [out.scene_id for out in outcomes]
    if len(set(ids)) != len(ids):
        raise EvaluationError("duplicate scene ids in outcomes")

    total: dict[str, Tally] = {}
    for out in outcomes:
        detected = out.result.detected if out.result is not None else ()
        accumulate(total, match_labels(detected, out.truth, aliases))
    detection = f1_scores(total)

    consistencies = [out.consistency for out in outcomes if out.consistency is not None]
    a_c, infinite_count = _mean_consistency(consistencies)
    satisfactions = [out.satisfaction for out in outcomes if out.satisfaction is not None]
    mean_satisfaction = sum(satisfactions) / len(satisfactions) if satisfactions else None

    by_size: dict[int, dict] = {}
    for out in sorted(outcomes, key=lambda o: (o.scene_size, o.scene_id)):
        bucket = by_size.setdefault(out.scene_size, {"consistencies": [], "satisfactions": [], "count": 0})
        bucket["count"] += 1
        if out.consistency is not None:
            bucket["consistencies"].append(out.consistency)
        if out.satisfaction is not None:
            bucket["satisfactions"].append(out.satisfaction)
    size_series = []
    for size in sorted(by_size):
        bucket = by_size[size]
        c_mean, c_inf = _mean_consistency(bucket["consistencies"])
        s_mean = (sum(bucket["satisfactions"]) / len(bucket["satisfactions"])
                  if bucket["satisfactions"] else None)
        size_series.append({
            "scene_size": size,
            "scenes": bucket["count"],
            "aC": _encode_score(c_mean),
            "infinite_count": c_inf,
            "satisfaction_rate": s_mean,
        })

    attempts_histogram: dict[str, int] = {}
    for out in outcomes:
        key = str(out.result.attempts) if out.result is not None else "failed"
        attempts_histogram[key] = attempts_histogram.get(key, 0) + 1

    per_scene = []
    for out in sorted(outcomes, key=lambda o: o.scene_id):
        per_scene.append({
            "scene_id": out.scene_id,
            "scene_size": out.scene_size,
            "detected": list(out.result.detected) if out.result is not None else [],
            "planned": list(out.result.planned.items) if out.result is not None else [],
            "scored_items": list(out.scored_items),
            "attempts": out.result.attempts if out.result is not None else None,
            "error": out.error,
            "consistency": _encode_score(out.consistency),
            "satisfaction_rate": out.satisfaction,
            "t_frame": out.t_frame,
        })

    return {
        "detection": detection,
        "planning": {
            "aC": _encode_score(a_c),
            "infinite_count": infinite_count,
            "satisfaction_rate": mean_satisfaction,
            "success_rate": success_rate(outcomes),
            "success_rate_per_run": success_rate_per_run(outcomes),
            "attempts_histogram": attempts_histogram,
        },
        "by_scene_size": size_series,
        "per_scene": per_scene,
        "provenance": dict(provenance, matrix_sha256=_sha256_of(serialize_matrix(m))),
    }


def report_to_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def report_series_csv(report: dict) -> str:
    """Delimited per-scene-size series for external plotting."""
    lines = ["scene_size,scenes,aC,satisfaction_rate"]
    for row in report["by_scene_size"]:
        a_c = row["aC"]
        a_c = "" if a_c is None else a_c
        sat = row["satisfaction_rate"]
        sat = "" if sat is None else f"{sat:.6f}"
        lines.append(f"{row['scene_size']},{row['scenes']},{a_c},{sat}")
    return "\n".join(lines) + "\n"


def report_text_table(report: dict) -> str:
    """Aligned plain-text summary of the headline numbers."""
    det = report["detection"]
    plan = report["planning"]

    def fmt(value):
        if value is None:
            return "n/a"
        if isinstance(value, str):
            return value
        return f"{value:.4f}"

    rows = [
        ("AF1", fmt(det["AF1"])),
        ("AP", fmt(det["AP"])),
        ("AR", fmt(det["AR"])),
        ("aC", fmt(plan["aC"])),
        ("satisfaction rate", fmt(plan["satisfaction_rate"])),
        ("success rate", fmt(plan["success_rate"])),
        ("success rate (per run)", fmt(plan["success_rate_per_run"])),
        ("-inf scenes", str(plan["infinite_count"])),
    ]
    width = max(len(name) for name, _ in rows)
    lines = [f"{name.ljust(width)}  {value}" for name, value in rows]
    lines.append("")
    lines.append("scene_size  scenes  aC          satisfaction")
    for row in report["by_scene_size"]:
        lines.append(
            f"{row['scene_size']:>10}  {row['scenes']:>6}  "
            f"{fmt(row['aC']):<10}  {fmt(row['satisfaction_rate'])}"
        )
    return "\n".join(lines) + "\n"
