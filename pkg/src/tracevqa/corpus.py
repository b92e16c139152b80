"""Manifest ingestion and image resolution.

A manifest is a JSONL file, one sample per line:

    {"id": "q1", "image": "img/q1.jpg", "question": "...",
     "answers": ["a", ...], "split": "train", "dataset": "okvqa"}

`answers` holds all annotator answers (OK-VQA: typically 10; FVQA: 1).
The whole file is rejected on the first malformed record.
"""

from __future__ import annotations

import json
import mimetypes
import os
from dataclasses import dataclass

from .errors import (
    DuplicateId,
    FileMissing,
    ImageMissing,
    MalformedRecord,
    UnsupportedMediaType,
)

_SPLITS = {"train", "test"}
_DATASETS = {"okvqa", "fvqa", "other"}
_MEDIA_TYPES = {"image/jpeg", "image/png"}


@dataclass(frozen=True)
class Sample:
    id: str
    image_ref: str
    question: str
    answers: tuple[str, ...]
    split: str = "train"
    dataset: str = "other"

    def __post_init__(self):
        if not self.id:
            raise ValueError("sample id must be non-empty")
        if not self.question:
            raise ValueError(f"sample {self.id}: empty question")
        if not self.answers:
            raise ValueError(f"sample {self.id}: empty answers")
        if self.split not in _SPLITS:
            raise ValueError(f"sample {self.id}: bad split {self.split!r}")
        if self.dataset not in _DATASETS:
            raise ValueError(f"sample {self.id}: bad dataset {self.dataset!r}")


@dataclass(frozen=True)
class Manifest:
    dataset_name: str
    samples: tuple[Sample, ...]

    def by_id(self, sample_id: str) -> Sample:
        for s in self.samples:
            if s.id == sample_id:
                return s
        raise KeyError(sample_id)


@dataclass(frozen=True)
class ImagePayload:
    """Either raw bytes + media type, or a URL left for the backend."""

    media_type: str
    data: bytes | None = None
    url: str | None = None

    @property
    def is_url(self) -> bool:
        return self.url is not None


def _parse_record(obj: dict, line_no: int) -> Sample:
    try:
        answers = obj["answers"]
        if not isinstance(answers, list) or not answers:
            raise MalformedRecord(line_no, "answers must be a non-empty list")
        return Sample(
            id=str(obj["id"]),
            image_ref=str(obj["image"]),
            question=str(obj["question"]),
            answers=tuple(str(a) for a in answers),
            split=str(obj.get("split", "train")),
            dataset=str(obj.get("dataset", "other")),
        )
    except KeyError as exc:
        raise MalformedRecord(line_no, f"missing field {exc.args[0]!r}") from None
    except ValueError as exc:
        raise MalformedRecord(line_no, str(exc)) from None


def load_manifest(path: str, dataset_name: str | None = None) -> Manifest:
    """Load all samples; raises on the first bad or duplicate record."""
    if not os.path.isfile(path):
        raise FileMissing(path)
    samples: list[Sample] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_no, f"invalid JSON: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise MalformedRecord(line_no, "record is not an object")
            sample = _parse_record(obj, line_no)
            if sample.id in seen:
                raise DuplicateId(sample.id, line_no)
            seen.add(sample.id)
            samples.append(sample)
    name = dataset_name or (samples[0].dataset if samples else "other")
    return Manifest(dataset_name=name, samples=tuple(samples))


def resolve_image(s: Sample, base_dir: str = ".") -> ImagePayload:
    """Read a local image or pass a URL through untouched."""
    ref = s.image_ref
    if ref.startswith(("http://", "https://")):
        media_type = mimetypes.guess_type(ref)[0] or "image/jpeg"
        return ImagePayload(media_type=media_type, url=ref)
    path = ref if os.path.isabs(ref) else os.path.join(base_dir, ref)
    if not os.path.isfile(path):
        raise ImageMissing(path)
    media_type = mimetypes.guess_type(path)[0]
    if media_type not in _MEDIA_TYPES:
        raise UnsupportedMediaType(f"{path}: {media_type}")
    with open(path, "rb") as fh:
        return ImagePayload(media_type=media_type, data=fh.read())
