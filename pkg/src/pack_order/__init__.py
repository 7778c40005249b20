"""Human-preference modeling, consistency scoring and sequence planning
for grocery packing order."""

from importlib import resources

from .preference import (
    PreferenceMatrix,
    SurveyCorpus,
    SurveySequence,
    build_matrix,
    deserialize_matrix,
    load_matrix,
    normalize_corpus,
    save_matrix,
    serialize_matrix,
)
from .scoring import (
    AverageScore,
    ConsistencyScore,
    PackingSequence,
    average_score,
    constraint_satisfaction_rate,
    score,
)
from .planner import plan, plan_exact, plan_greedy, plan_local_search, plan_random
from .textpipe import (
    PipelineResult,
    PromptTemplate,
    ReferenceLexicon,
    Templates,
    ValidationPolicy,
    parse_detection,
    render_planning_prompt,
    run_pipeline,
    validate_plan,
)
from .provider import ChatExchange, MockProvider, LiveProvider, ProviderConfig, make_provider
from .metrics import assemble_report, f1_scores, match_labels, success_rate
from .dataset import SceneRecord, SceneSet, load_aliases, load_scene_set, load_survey, synth_corpus

__version__ = "0.1.0"


def default_lexicon() -> ReferenceLexicon:
    """The shipped 120-entry grocery lexicon."""
    text = resources.files("pack_order").joinpath("data/lexicon.txt").read_text()
    entries = tuple(line.strip().lower() for line in text.splitlines() if line.strip())
    return ReferenceLexicon(entries)
