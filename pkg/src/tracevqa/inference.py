"""Single-pass structured inference and trace parsing.

One completion call per sample; the emitted trace is parsed totally,
degrading gracefully (full -> partial -> answer_only -> unparsed) so that
even free-prose baselines can be scored by the same evaluator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .builder import ANSWER_MARKER
from .client import Backend, ChatRequest, system_message, user_message
from .corpus import ImagePayload, Manifest, Sample
from .errors import PathError
from .relpath import RelationPath, parse_path, render_path
from .templates import DEFAULT_TEMPLATES, render_template

STATUS_FULL = "full"
STATUS_PARTIAL = "partial"
STATUS_ANSWER_ONLY = "answer_only"
STATUS_UNPARSED = "unparsed"

_LABELS = {"vision path:": "vision", "text path:": "text"}


@dataclass(frozen=True)
class Prediction:
    sample_id: str
    raw_text: str
    parse_status: str
    answers: tuple[str, ...]
    text_path: RelationPath | None = None
    vision_path: RelationPath | None = None
    explanation: str | None = None

    @property
    def primary_answer(self) -> str:
        return self.answers[0] if self.answers else ""

    def to_json(self) -> str:
        obj = {
            "sample_id": self.sample_id,
            "raw_text": self.raw_text,
            "parse_status": self.parse_status,
            "answers": list(self.answers),
            "text_path": render_path(self.text_path) if self.text_path else None,
            "vision_path": render_path(self.vision_path) if self.vision_path else None,
            "explanation": self.explanation,
        }
        return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def parse_trace(text: str, sample_id: str = "") -> Prediction:
    """Total parser for the structured trace format."""
    lines = text.splitlines()
    paths: dict[str, RelationPath] = {}
    last_path_line = -1
    for i, line in enumerate(lines):
        lowered = line.strip().lower()
        for label, kind in _LABELS.items():
            if lowered.startswith(label) and kind not in paths:
                try:
                    paths[kind] = parse_path(line.strip()[len(label):].strip())
                    last_path_line = max(last_path_line, i)
                except PathError:
                    pass
                break

    marker_line = next(
        (i for i, line in enumerate(lines) if ANSWER_MARKER.lower() in line.lower()), None
    )

    answers: tuple[str, ...]
    explanation: str | None = None
    if marker_line is not None:
        raw_line = lines[marker_line]
        idx = raw_line.lower().index(ANSWER_MARKER.lower())
        tail = raw_line[idx + len(ANSWER_MARKER):]
        answers = tuple(
            a.strip().lower() for a in tail.split(",") if a.strip()
        ) or ("",)
        between = lines[last_path_line + 1 : marker_line]
        joined = "\n".join(between).strip()
        explanation = joined or None
        if "text" in paths and "vision" in paths and explanation:
            status = STATUS_FULL
        elif paths or explanation:
            status = STATUS_PARTIAL
        else:
            status = STATUS_ANSWER_ONLY
    else:
        non_empty = [line.strip() for line in lines if line.strip()]
        answers = (non_empty[-1].lower(),) if non_empty else ("",)
        status = STATUS_UNPARSED

    return Prediction(
        sample_id=sample_id,
        raw_text=text,
        parse_status=status,
        answers=answers,
        text_path=paths.get("text"),
        vision_path=paths.get("vision"),
        explanation=explanation,
    )


def infer(
    s: Sample,
    backend: Backend,
    image: ImagePayload | None = None,
    system_template_id: str = DEFAULT_TEMPLATES["infer_system"],
    templates_dir: str | None = None,
    temperature: float = 0.2,
    seed: int | None = None,
) -> Prediction:
    """Exactly one completion call per sample."""
    system = render_template(system_template_id, templates_dir).strip()
    req = ChatRequest(
        messages=(system_message(system), user_message(s.question, image)),
        temperature=temperature,
        seed=seed,
    )
    response = backend.complete(req)
    return parse_trace(response.text, sample_id=s.id)


def run_inference(
    manifest: Manifest,
    backend: Backend,
    out_path: str,
    image_base_dir: str = ".",
    attach_images: bool = False,
    **kwargs,
) -> list[Prediction]:
    """Predictions for every manifest sample, written in manifest order."""
    from .corpus import resolve_image

    predictions = []
    for s in manifest.samples:
        image = None
        if attach_images:
            try:
                image = resolve_image(s, image_base_dir)
            except Exception:
                image = None
        predictions.append(infer(s, backend, image, **kwargs))
    with open(out_path, "w", encoding="utf-8") as fh:
        for p in predictions:
            fh.write(p.to_json() + "\n")
    return predictions


def read_predictions(path: str) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
