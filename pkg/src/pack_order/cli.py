"""Command-line entry point composing the model-building, scoring,
planning and evaluation workflows.
"""

from __future__ import annotations

import functools
import hashlib
import json
import math
import sys
import time
from pathlib import Path

import click

from . import default_lexicon
from .errors import (
    AggregationError,
    AuthenticationError,
    CapacityError,
    EmptyDetectionError,
    EvaluationError,
    ModelBuildError,
    PackOrderError,
    ProviderError,
    SchemaError,
    ScoringError,
    TemplateError,
    ValidationExhaustedError,
)
from .dataset import load_aliases, load_scene_set, load_survey
from .metrics import (
    SceneOutcome,
    assemble_report,
    report_series_csv,
    report_text_table,
    report_to_json,
    score_outcome,
)
from .planner import EXACT_MAX_ITEMS, LOCAL_SEARCH_RESTARTS, PLANNERS, plan
from .plots import render_bench_figure, render_report_figures
from .preference import (
    LEGACY_COMPLEMENTARITY_TOL,
    build_matrix,
    load_matrix,
    save_matrix,
)
from .provider import ProviderConfig, make_provider
from .scoring import PackingSequence, constraint_satisfaction_rate, score
from .textpipe import ReferenceLexicon, Templates, ValidationPolicy, load_templates, run_pipeline

EXIT_CODES = {
    SchemaError: 3,
    ModelBuildError: 4,
    ScoringError: 5,
    AggregationError: 5,
    CapacityError: 6,
    AuthenticationError: 7,
    ProviderError: 7,
    TemplateError: 8,
    EmptyDetectionError: 8,
    ValidationExhaustedError: 8,
    EvaluationError: 9,
}

EXIT_CODE_HELP = """\
Exit codes:
  0  success
  2  usage error
  3  schema violation in an input file (category: schema)
  4  model build failure (category: model-build)
  5  scoring or aggregation error (category: scoring/aggregation)
  6  exact-planner capacity exceeded (category: capacity)
  7  provider transport/auth/fixture error (category: provider*)
  8  pipeline parsing, template or validation error (category: template/
     empty-detection/validation-exhausted)
  9  evaluation error (category: evaluation)
"""


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except PackOrderError as exc:
            for cls, code in EXIT_CODES.items():
                if isinstance(exc, cls):
                    break
            else:
                code = 1
            click.echo(f"error[{exc.category}]: {exc}", err=True)
            sys.exit(code)
    return wrapper


@click.group(epilog=EXIT_CODE_HELP)
def main():
    """Build, score, plan and evaluate grocery packing sequences.

    Sequences on the command line are bottom-first (first label is the
    lowest item in the container) unless --top-first is given.
    """


@main.command("build-model")
@click.option("--survey", "survey_path", required=True, type=click.Path(exists=True),
              help="Survey corpus file (JSON).")
@click.option("--alpha", default=0.0, show_default=True,
              help="Laplace smoothing; 0 reproduces raw frequencies, 0.5 recommended for scoring.")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Where to write the preference matrix file.")
@handle_errors
def cmd_build_model(survey_path, alpha, out_path):
    """Build a pairwise preference matrix from a survey corpus."""
    corpus = load_survey(survey_path)
    m = build_matrix(corpus, alpha)
    save_matrix(m, out_path)
    click.echo(f"built {m.size}x{m.size} matrix from {len(corpus.sequences)} sequences -> {out_path}")


def _parse_sequence(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _load_matrix_opt(path, legacy):
    if legacy:
        return load_matrix(path, LEGACY_COMPLEMENTARITY_TOL)
    return load_matrix(path)


matrix_option = click.option("--matrix", "matrix_path", required=True,
                             type=click.Path(exists=True), help="Preference matrix file.")
legacy_option = click.option("--legacy-matrix", is_flag=True,
                             help="Accept 1e-3 complementarity slack for imported 3-decimal tables.")


@main.command("score")
@matrix_option
@legacy_option
@click.option("--sequence", "sequence_text", help="Comma-separated labels, bottom-first.")
@click.option("--sequence-file", type=click.Path(exists=True),
              help="File with one comma-separated sequence per line.")
@click.option("--top-first", is_flag=True, help="Treat input sequences as top-first and reverse them.")
@click.option("--aliases", "aliases_path", type=click.Path(exists=True), help="Alias table file.")
@handle_errors
def cmd_score(matrix_path, legacy_matrix, sequence_text, sequence_file, top_first, aliases_path):
    """Score packing sequences against a preference matrix."""
    if not sequence_text and not sequence_file:
        raise click.UsageError("provide --sequence or --sequence-file")
    m = _load_matrix_opt(matrix_path, legacy_matrix)
    aliases = load_aliases(aliases_path) if aliases_path else None
    lines = []
    if sequence_text:
        lines.append(sequence_text)
    if sequence_file:
        lines.extend(x for x in Path(sequence_file).read_text().splitlines() if x.strip())
    for line in lines:
        labels = _parse_sequence(line)
        if top_first:
            labels.reverse()
        seq = PackingSequence.from_labels(labels, aliases)
        result = score(seq, m)
        click.echo(f"sequence: {', '.join(seq.items)}")
        click.echo(f"C = {result.value}")
        for below, above, term in result.pair_terms:
            click.echo(f"  ln P({below} below {above}) = {term}")


@main.command("plan")
@matrix_option
@legacy_option
@click.option("--items", required=True, help="Comma-separated item labels to pack.")
@click.option("--method", type=click.Choice(PLANNERS), default="local_search", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--restarts", type=int, default=LOCAL_SEARCH_RESTARTS, show_default=True)
@click.option("--exact-max-items", type=int, default=EXACT_MAX_ITEMS, show_default=True)
@handle_errors
def cmd_plan(matrix_path, legacy_matrix, items, method, seed, restarts, exact_max_items):
    """Plan a bottom-first packing sequence for the given items."""
    m = _load_matrix_opt(matrix_path, legacy_matrix)
    labels = [x.lower() for x in _parse_sequence(items)]
    seq = plan(method, labels, m, seed=seed, restarts=restarts, exact_max_items=exact_max_items)
    result = score(seq, m)
    click.echo(f"method: {method} (seed {seed})")
    click.echo(f"sequence (bottom-first): {', '.join(seq.items)}")
    click.echo(f"C = {result.value}")
    if len(set(seq.items)) >= 2:
        click.echo(f"satisfaction rate = {constraint_satisfaction_rate(seq, m):.4f}")


def _provider_config(provider, fixtures, endpoint, model, temperature, timeout, api_key_env):
    if provider == "mock":
        return ProviderConfig(kind="mock", fixtures_path=fixtures or "")
    return ProviderConfig(kind="live", endpoint=endpoint or "", model=model or "",
                          temperature=temperature, timeout=timeout, api_key_env=api_key_env)


def _template_hashes(templates: Templates) -> dict:
    return {
        "perception": hashlib.sha256(
            json.dumps(list(templates.perception.messages), sort_keys=True).encode()
        ).hexdigest(),
        "planning": hashlib.sha256(
            json.dumps(list(templates.planning.messages), sort_keys=True).encode()
        ).hexdigest(),
    }


@main.command("evaluate")
@click.option("--scenes", "scenes_path", required=True, type=click.Path(exists=True))
@matrix_option
@legacy_option
@click.option("--provider", type=click.Choice(["mock", "live"]), default="mock", show_default=True)
@click.option("--fixtures", type=click.Path(exists=True), help="Fixture file for the mock provider.")
@click.option("--templates", "templates_path", type=click.Path(exists=True),
              help="Prompt template config; defaults embedded.")
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True),
              help="Reference lexicon; defaults to the shipped 120-entry list.")
@click.option("--aliases", "aliases_path", type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path(),
              help="Output directory for report.json, report.txt, series.csv and figures.")
@click.option("--match-threshold", default=0.30, show_default=True)
@click.option("--max-attempts", default=3, show_default=True)
@click.option("--outlier-multiplier", default=6.0, show_default=True)
@click.option("--endpoint", help="Chat-completions endpoint URL (live).")
@click.option("--model", help="Model name (live).")
@click.option("--temperature", default=0.0, show_default=True)
@click.option("--timeout", default=60.0, show_default=True)
@click.option("--api-key-env", default="PACK_ORDER_API_KEY", show_default=True)
@click.option("--live", "live_ack", is_flag=True,
              help="Required acknowledgment for live API runs (these cost money).")
@click.option("--seed", type=int, default=0, show_default=True)
@handle_errors
def cmd_evaluate(scenes_path, matrix_path, legacy_matrix, provider, fixtures, templates_path,
                 lexicon_path, aliases_path, out_dir, match_threshold, max_attempts,
                 outlier_multiplier, endpoint, model, temperature, timeout, api_key_env,
                 live_ack, seed):
    """Run the perception+planning pipeline over a scene set and report metrics."""
    if provider == "live" and not live_ack:
        raise click.UsageError("live runs require the --live acknowledgment flag")
    if provider == "mock" and not fixtures:
        raise click.UsageError("--provider mock requires --fixtures")

    scene_set = load_scene_set(scenes_path)
    m = _load_matrix_opt(matrix_path, legacy_matrix)
    aliases = load_aliases(aliases_path) if aliases_path else None
    lex = ReferenceLexicon.from_file(lexicon_path) if lexicon_path else default_lexicon()
    templates = load_templates(templates_path) if templates_path else Templates()
    policy = ValidationPolicy(match_threshold, max_attempts, outlier_multiplier)
    config = _provider_config(provider, fixtures, endpoint, model, temperature, timeout, api_key_env)
    client = make_provider(config)

    outcomes = []
    for scene in scene_set.scenes:
        image = None
        if scene.image and Path(scene.image).exists():
            data = Path(scene.image).read_bytes()
            image = {"data": data, "media_type": "image/jpeg"}
        start = time.monotonic()
        try:
            result = run_pipeline(scene.scene_id, client, templates, lex, policy, image=image)
            outcome = SceneOutcome(scene.scene_id, scene.scene_size, scene.ground_truth, result)
        except (EmptyDetectionError, ValidationExhaustedError) as exc:
            outcome = SceneOutcome(scene.scene_id, scene.scene_size, scene.ground_truth,
                                   None, error=exc.category)
        # mock runs report zero timing so outputs stay byte-reproducible
        outcome.t_frame = 0.0 if provider == "mock" else time.monotonic() - start
        score_outcome(outcome, m, aliases)
        outcomes.append(outcome)

    provenance = {
        "provider": config.describe(),
        "templates": _template_hashes(templates),
        "policy": {"match_threshold": policy.match_threshold,
                   "max_attempts": policy.max_attempts,
                   "outlier_multiplier": policy.outlier_multiplier},
        "seed": seed,
        "scenes_file": Path(scenes_path).name,
    }
    if provider == "mock":
        provenance["fixtures_sha256"] = hashlib.sha256(Path(fixtures).read_bytes()).hexdigest()
    report = assemble_report(outcomes, m, provenance, aliases)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report_to_json(report))
    (out / "report.txt").write_text(report_text_table(report))
    (out / "series.csv").write_text(report_series_csv(report))
    figures = render_report_figures(report, out / "figures")
    click.echo(report_text_table(report), nl=False)
    click.echo(f"report written to {out / 'report.json'} ({len(figures)} figures)")


@main.command("bench")
@click.option("--scenes", "scenes_path", required=True, type=click.Path(exists=True))
@matrix_option
@legacy_option
@click.option("--methods", default="exact,greedy,local_search,random", show_default=True,
              help="Comma-separated planner methods to compare.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--restarts", type=int, default=LOCAL_SEARCH_RESTARTS, show_default=True)
@click.option("--exact-max-items", type=int, default=EXACT_MAX_ITEMS, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@handle_errors
def cmd_bench(scenes_path, matrix_path, legacy_matrix, methods, seed, restarts,
              exact_max_items, out_dir):
    """Compare planners against the random baseline on scene ground truth."""
    method_list = [x.strip() for x in methods.split(",") if x.strip()]
    unknown = [x for x in method_list if x not in PLANNERS]
    if unknown:
        raise click.UsageError(f"unknown methods: {unknown}; choose from {PLANNERS}")
    scene_set = load_scene_set(scenes_path)
    m = _load_matrix_opt(matrix_path, legacy_matrix)

    rows = []
    for scene in scene_set.scenes:
        items = list(dict.fromkeys(scene.ground_truth))
        for method in method_list:
            if method == "exact" and len(items) > exact_max_items:
                continue
            seq = plan(method, items, m, seed=seed, restarts=restarts,
                       exact_max_items=exact_max_items)
            c = score(seq, m).value
            sat = constraint_satisfaction_rate(seq, m) if len(set(seq.items)) >= 2 else None
            rows.append({"scene_id": scene.scene_id, "scene_size": scene.scene_size,
                         "method": method, "C": c, "satisfaction_rate": sat})

    series: dict[str, list[dict]] = {}
    for method in method_list:
        by_size: dict[int, list[dict]] = {}
        for row in rows:
            if row["method"] == method:
                by_size.setdefault(row["scene_size"], []).append(row)
        points = []
        for size in sorted(by_size):
            group = by_size[size]
            values = [r["C"] for r in group]
            a_c = -math.inf if any(v == -math.inf for v in values) else sum(values) / len(values)
            sats = [r["satisfaction_rate"] for r in group if r["satisfaction_rate"] is not None]
            points.append({
                "scene_size": size,
                "scenes": len(group),
                "aC": "-inf" if a_c == -math.inf else a_c,
                "satisfaction_rate": sum(sats) / len(sats) if sats else None,
            })
        series[method] = points

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = {"seed": seed, "methods": method_list, "series": series, "per_scene": [
        dict(r, C="-inf" if r["C"] == -math.inf else r["C"]) for r in rows
    ]}
    (out / "bench.json").write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    lines = ["method,scene_size,scenes,aC,satisfaction_rate"]
    for method in method_list:
        for point in series[method]:
            sat = point["satisfaction_rate"]
            lines.append(f"{method},{point['scene_size']},{point['scenes']},"
                         f"{point['aC']},{'' if sat is None else f'{sat:.6f}'}")
    (out / "bench.csv").write_text("\n".join(lines) + "\n")
    render_bench_figure(series, out)
    for line in lines:
        click.echo(line)


if __name__ == "__main__":
    main()
