"""Dual-path planner: K candidate (text path, vision path) pairs per sample.

One call asks for all K pairs at once; if fewer than K distinct pairs come
back, top-up retries re-ask. Unparsable pairs are dropped with a warning
record rather than failing the sample.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .client import Backend, ChatRequest, user_message
from .corpus import ImagePayload, Sample
from .errors import NoPathsFound, PathError, PlanningFailed, ProtocolError
from .relpath import DualPath, parse_path
from .templates import DEFAULT_TEMPLATES, render_template

log = logging.getLogger(__name__)

_LABELS = ("vision path:", "text path:")


@dataclass(frozen=True)
class PlannerConfig:
    k: int = 3  # per the protocol: 3 for okvqa, 4 for fvqa
    max_retries_per_sample: int = 2
    prompt_template_id: str = DEFAULT_TEMPLATES["plan"]
    temperature: float = 0.8
    templates_dir: str | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")


def default_k(dataset: str) -> int:
    return 4 if dataset == "fvqa" else 3


@dataclass
class PlanStats:
    raw_candidates: int = 0
    dropped_unparsable: int = 0
    dropped_duplicate: int = 0
    calls: int = 0
    warnings: list = field(default_factory=list)


def parse_planner_output(text: str, stats: PlanStats | None = None) -> list[DualPath]:
    """Pair labeled "vision path:" / "text path:" lines in order.

    A pair closes as soon as both sides are present; unparsable sides drop
    the pair with a warning. Raises NoPathsFound when nothing survives.
    """
    stats = stats if stats is not None else PlanStats()
    pending: dict[str, str] = {}
    pairs: list[tuple[str, str]] = []
    for line in text.splitlines():
        stripped = line.strip()
        lowered = stripped.lower()
        for label in _LABELS:
            if lowered.startswith(label):
                kind = "vision" if label.startswith("vision") else "text"
                pending[kind] = stripped[len(label):].strip()
                if "vision" in pending and "text" in pending:
                    pairs.append((pending.pop("text"), pending.pop("vision")))
                break
    out: list[DualPath] = []
    for text_raw, vision_raw in pairs:
        stats.raw_candidates += 1
        try:
            out.append(
                DualPath(text_path=parse_path(text_raw), vision_path=parse_path(vision_raw))
            )
        except PathError as exc:
            stats.dropped_unparsable += 1
            stats.warnings.append(f"unparsable pair ({text_raw!r}, {vision_raw!r}): {exc}")
            log.warning("dropping unparsable pair: %s", exc)
    if not out:
        raise NoPathsFound("no valid labeled path pairs in planner output")
    return out


def plan_candidates(
    s: Sample,
    cfg: PlannerConfig,
    backend: Backend,
    image: ImagePayload | None = None,
    stats: PlanStats | None = None,
) -> list[DualPath]:
    """Collect up to K distinct dual paths, retrying to top up.

    Deduplicates by canonical rendering of both paths; returns between 1
    and K pairs or raises PlanningFailed.
    """
    stats = stats if stats is not None else PlanStats()
    prompt = render_template(
        cfg.prompt_template_id, cfg.templates_dir, question=s.question, k=cfg.k
    )
    seen: dict[tuple[str, str], DualPath] = {}
    attempts = 1 + cfg.max_retries_per_sample
    for _ in range(attempts):
        req = ChatRequest(
            messages=(user_message(prompt, image),),
            temperature=cfg.temperature,
        )
        stats.calls += 1
        try:
            candidates = parse_planner_output(backend.complete(req).text, stats)
        except (NoPathsFound, ProtocolError) as exc:
            stats.warnings.append(f"planning call failed: {exc}")
            continue
        for cand in candidates:
            key = cand.key()
            if key in seen:
                stats.dropped_duplicate += 1
            else:
                seen[key] = cand
        if len(seen) >= cfg.k:
            break
    if not seen:
        raise PlanningFailed(f"sample {s.id}: no valid dual paths after {attempts} attempts")
    return list(seen.values())[: cfg.k]
