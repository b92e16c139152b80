"""Dual-path reasoning-trace pipeline for knowledge-based VQA.

Stages: plan candidate relation-path pairs, compose path-grounded
explanations, select the best triplet, export the trace-enriched SFT
dataset, run single-pass structured inference, and score answers with
soft VQA accuracy.
"""

from .relpath import (
    CoverageReport,
    DualPath,
    Hop,
    RelationPath,
    check_binding,
    coverage_score,
    parse_path,
    path_tokens,
    render_path,
)
from .corpus import Manifest, Sample, load_manifest, resolve_image
from .client import (
    BackendConfig,
    ChatRequest,
    ChatResponse,
    MockBackend,
    complete,
    script_mock,
)
from .planner import PlannerConfig, parse_planner_output, plan_candidates
from .composer import ComposerConfig, Triplet, compose, filter_candidates, make_triplet
from .selector import SelectorConfig, Verdict, parse_judge_verdict, select_best
from .builder import (
    AugmentedRecord,
    PipelineConfig,
    StageCache,
    build_dataset,
    build_record,
    render_target,
)
from .inference import Prediction, infer, parse_trace, run_inference
from .evaluator import EvalReport, evaluate, normalize_answer, vqa_accuracy

__version__ = "0.1.0"
