"""Best-triplet selection: LLM-as-a-judge, with a seeded random mode for
the no-selector ablation. Total by construction — parsing failures fall
back to a deterministic coverage-sum choice.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass

from .client import Backend, ChatRequest, user_message
from .corpus import ImagePayload, Sample
from .composer import Triplet
from .errors import IndexOutOfRange, NoVerdictMarker, ProtocolError
from .relpath import render_path
from .templates import DEFAULT_TEMPLATES, render_template

_VERDICT_RE = re.compile(r"BEST:\s*(-?\d+)", re.IGNORECASE)

MODE_JUDGE = "judge"
MODE_RANDOM = "random"
MODE_SINGLE = "single"


@dataclass(frozen=True)
class SelectorConfig:
    mode: str = MODE_JUDGE
    prompt_template_id: str = DEFAULT_TEMPLATES["judge"]
    temperature: float = 0.2
    templates_dir: str | None = None


@dataclass(frozen=True)
class Verdict:
    best_index: int  # 1-based over the presented candidates
    mode: str
    judge_raw: str = ""
    fallback: bool = False


def parse_judge_verdict(text: str, k: int) -> int:
    """Integer after the last "BEST:" marker, validated against [1, k]."""
    if k < 1:
        raise ValueError("k must be >= 1")
    matches = _VERDICT_RE.findall(text)
    if not matches:
        raise NoVerdictMarker(f"no BEST: marker in {text[:120]!r}")
    index = int(matches[-1])
    if not 1 <= index <= k:
        raise IndexOutOfRange(f"BEST: {index} outside [1, {k}]")
    return index


def _format_candidates(triplets: list[Triplet]) -> str:
    blocks = []
    for i, t in enumerate(triplets, start=1):
        blocks.append(
            f"Candidate {i}:\n"
            f"vision path: {render_path(t.dual_path.vision_path)}\n"
            f"text path: {render_path(t.dual_path.text_path)}\n"
            f"{t.explanation}"
        )
    return "\n\n".join(blocks)


def _coverage_fallback(triplets: list[Triplet]) -> int:
    """Highest text+vision coverage sum; ties go to the lowest
    candidate_index, which in presentation order is the earliest slot."""
    best_slot, best_key = 1, None
    for slot, t in enumerate(triplets, start=1):
        key = (-t.coverage_sum, t.candidate_index)
        if best_key is None or key < best_key:
            best_key, best_slot = key, slot
    return best_slot


def select_best(
    s: Sample,
    triplets: list[Triplet],
    backend: Backend | None = None,
    mode: str = MODE_JUDGE,
    seed: int = 42,
    cfg: SelectorConfig | None = None,
    image: ImagePayload | None = None,
) -> Verdict:
    """Pick one triplet; always returns a valid 1-based index."""
    if not triplets:
        raise ValueError("triplets must be non-empty")
    if len(triplets) == 1:
        return Verdict(best_index=1, mode=MODE_SINGLE)
    if mode == MODE_RANDOM:
        rng = random.Random(seed)
        return Verdict(best_index=rng.randrange(len(triplets)) + 1, mode=MODE_RANDOM)
    if mode != MODE_JUDGE:
        raise ValueError(f"unknown selector mode {mode!r}")
    if backend is None:
        raise ValueError("judge mode requires a backend")
    cfg = cfg or SelectorConfig()
    prompt = render_template(
        cfg.prompt_template_id,
        cfg.templates_dir,
        question=s.question,
        candidates=_format_candidates(triplets),
    )
    raw = ""
    for _ in range(2):  # one retry on an unusable verdict
        req = ChatRequest(messages=(user_message(prompt, image),), temperature=cfg.temperature)
        try:
            raw = backend.complete(req).text
            index = parse_judge_verdict(raw, len(triplets))
            return Verdict(best_index=index, mode=MODE_JUDGE, judge_raw=raw)
        except (NoVerdictMarker, IndexOutOfRange, ProtocolError):
            continue
    return Verdict(
        best_index=_coverage_fallback(triplets),
        mode=MODE_JUDGE,
        judge_raw=raw,
        fallback=True,
    )
