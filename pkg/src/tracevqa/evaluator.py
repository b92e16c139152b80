"""Answer normalization and soft VQA accuracy.

Acc = min(#annotators giving the answer / 3, 1) for multi-annotator lists
(OK-VQA style); single-answer lists (FVQA) score exact match 0/1. Both
sides are normalized before matching. The official VQA metric's
10-choose-9 annotator averaging is deliberately not implemented; this is
the plain min-form.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import asdict, dataclass, field

from .corpus import Manifest
from .errors import MissingPrediction, UnknownSample

_ARTICLES = {"a", "an", "the"}
_NUMBER_WORDS = {
    "zero": "0", "one": "1", "two": "2", "three": "3", "four": "4",
    "five": "5", "six": "6", "seven": "7", "eight": "8", "nine": "9",
    "ten": "10",
}
_PUNCT_RE = re.compile(r"[^\w\s]")


def normalize_answer(text: str) -> str:
    """Lowercase, strip punctuation, drop articles, map zero-ten to digits."""
    lowered = _PUNCT_RE.sub("", text.lower())
    words = []
    for w in lowered.split():
        if w in _ARTICLES:
            continue
        words.append(_NUMBER_WORDS.get(w, w))
    return " ".join(words)


def vqa_accuracy(predicted: str, annotator_answers: list[str] | tuple[str, ...]) -> float:
    """Soft accuracy for multi-annotator lists, exact match for singletons."""
    if not annotator_answers:
        raise ValueError("annotator_answers must be non-empty")
    pred = normalize_answer(predicted)
    normalized = [normalize_answer(a) for a in annotator_answers]
    if len(normalized) == 1:
        return 1.0 if pred == normalized[0] else 0.0
    matches = sum(1 for a in normalized if a == pred)
    return min(matches / 3.0, 1.0)


@dataclass
class EvalReport:
    dataset: str
    n_samples: int
    mean_accuracy: float
    per_sample: dict[str, float]
    parse_status_counts: dict[str, int]
    source: str = ""
    target: str = ""
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def table(self) -> str:
        """Human-readable summary."""
        lines = [
            f"dataset:  {self.dataset}",
            f"samples:  {self.n_samples}",
            f"accuracy: {self.mean_accuracy:.4f}",
        ]
        if self.source or self.target:
            lines.insert(0, f"source={self.source or '-'} target={self.target or '-'}")
        if self.parse_status_counts:
            statuses = ", ".join(
                f"{k}={v}" for k, v in sorted(self.parse_status_counts.items())
            )
            lines.append(f"parse:    {statuses}")
        return "\n".join(lines)


def evaluate(
    predictions: list[dict],
    manifest: Manifest,
    source: str = "",
    target: str = "",
    config: dict | None = None,
) -> EvalReport:
    """Join predictions on sample_id and score the first predicted answer.

    A cross-domain run is the same call with a manifest from a different
    dataset; source/target labels carry the grid position.
    """
    by_id: dict[str, dict] = {}
    manifest_ids = {s.id for s in manifest.samples}
    for p in predictions:
        if p["sample_id"] not in manifest_ids:
            raise UnknownSample(p["sample_id"])
        by_id[p["sample_id"]] = p

    per_sample: dict[str, float] = {}
    status_counts: Counter = Counter()
    for s in manifest.samples:
        if s.id not in by_id:
            raise MissingPrediction(s.id)
        p = by_id[s.id]
        answers = p.get("answers") or [""]
        per_sample[s.id] = vqa_accuracy(answers[0], s.answers)
        status_counts[p.get("parse_status", "unknown")] += 1

    n = len(per_sample)
    mean = sum(per_sample.values()) / n if n else 0.0
    return EvalReport(
        dataset=manifest.dataset_name,
        n_samples=n,
        mean_accuracy=mean,
        per_sample=per_sample,
        parse_status_counts=dict(status_counts),
        source=source,
        target=target or manifest.dataset_name,
        config=dict(config or {}),
    )


def write_report(report: EvalReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
