"""Reasoning composer: dual path -> path-grounded explanation + filter.

The compose prompt never contains the gold answer. Each explanation gets
a coverage report against its dual path; candidates with no overlap on
either path (below min_side_coverage) are dropped but kept for audit.
"""

from __future__ import annotations

from dataclasses import dataclass

from .client import Backend, ChatRequest, user_message
from .corpus import ImagePayload, Sample
from .errors import AllFiltered, ComposeFailed
from .relpath import CoverageReport, DualPath, check_binding, render_path
from .templates import DEFAULT_TEMPLATES, render_template

# default: strictly positive overlap required on both paths
MIN_SIDE_COVERAGE = 1e-9


@dataclass(frozen=True)
class ComposerConfig:
    prompt_template_id: str = DEFAULT_TEMPLATES["compose"]
    temperature: float = 0.2
    max_retries: int = 1
    min_side_coverage: float = MIN_SIDE_COVERAGE
    templates_dir: str | None = None


@dataclass(frozen=True)
class Triplet:
    """(dual path, explanation, coverage) — the unit the selector ranks."""

    dual_path: DualPath
    explanation: str
    coverage: CoverageReport
    candidate_index: int

    def __post_init__(self):
        if not self.explanation.strip():
            raise ValueError("explanation must be non-empty")

    @property
    def coverage_sum(self) -> float:
        return self.coverage.text_coverage + self.coverage.vision_coverage

    @property
    def min_side_coverage(self) -> float:
        return min(self.coverage.text_coverage, self.coverage.vision_coverage)


def compose(
    s: Sample,
    d: DualPath,
    backend: Backend,
    cfg: ComposerConfig | None = None,
    image: ImagePayload | None = None,
) -> str:
    """One explanation for one dual path; retries once on blank output."""
    cfg = cfg or ComposerConfig()
    prompt = render_template(
        cfg.prompt_template_id,
        cfg.templates_dir,
        question=s.question,
        vision_path=render_path(d.vision_path),
        text_path=render_path(d.text_path),
    )
    for _ in range(1 + cfg.max_retries):
        req = ChatRequest(messages=(user_message(prompt, image),), temperature=cfg.temperature)
        text = backend.complete(req).text.strip()
        if text:
            return text
    raise ComposeFailed(f"sample {s.id}: empty explanation after {1 + cfg.max_retries} attempts")


def make_triplet(d: DualPath, explanation: str, candidate_index: int) -> Triplet:
    return Triplet(
        dual_path=d,
        explanation=explanation,
        coverage=check_binding(explanation, d),
        candidate_index=candidate_index,
    )


def filter_candidates(
    triplets: list[Triplet], min_side_coverage: float = MIN_SIDE_COVERAGE
) -> tuple[list[Triplet], list[Triplet]]:
    """Order-preserving partition into (kept, dropped).

    A triplet is dropped iff either side's coverage falls below the
    threshold. Raises AllFiltered when nothing is kept; the caller picks
    the fallback.
    """
    kept, dropped = [], []
    for t in triplets:
        if (
            t.coverage.text_coverage < min_side_coverage
            or t.coverage.vision_coverage < min_side_coverage
        ):
            dropped.append(t)
        else:
            kept.append(t)
    if not kept:
        raise AllFiltered(f"all {len(triplets)} candidates below coverage threshold")
    return kept, dropped
