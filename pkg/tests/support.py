"""Shared fixtures: a small manifest plus matcher-scripted mock backends
that drive the whole pipeline deterministically."""

import json

import pytest

from tracevqa.client import script_mock
from tracevqa.corpus import Manifest, Sample

TABLE5_ANSWERS = (
    ["atlantic"] * 4 + ["dock of red sea"] * 2 + ["kamchatka"] * 2 + ["philippine"] * 2
)


def make_sample(i: int, dataset: str = "okvqa") -> Sample:
    answers = [f"answer{i}"] * 4 + [f"alt{i}"] * 3 + [f"other{i}"] * 3
    if dataset == "fvqa":
        answers = [f"answer{i}"]
    return Sample(
        id=f"q{i}",
        image_ref=f"img/q{i}.jpg",
        question=f"what is in image {i}?",
        answers=tuple(answers),
        split="train",
        dataset=dataset,
    )


def make_manifest(n: int, dataset: str = "okvqa") -> Manifest:
    return Manifest(
        dataset_name=dataset, samples=tuple(make_sample(i, dataset) for i in range(n))
    )


def plan_response(i: int, k: int) -> str:
    lines = []
    for j in range(k):
        lines.append(f"vision path: obj{i}.color → obj{i}.shape_{j}")
        lines.append(f"text path: obj{i}.kind → obj{i}.name_{j}")
    return "\n".join(lines)


def compose_response(i: int) -> str:
    # cites obj{i} so coverage is positive on both paths of every candidate
    return (
        f"Looking at the image, the obj{i} has a clear color and shape. "
        f"Its kind and name follow from how an obj{i} usually looks."
    )


def trace_response(i: int) -> str:
    return (
        f"vision path: obj{i}.color → obj{i}.shape_0\n"
        f"text path: obj{i}.kind → obj{i}.name_0\n"
        f"The obj{i} color points at its kind.\n"
        f"Therefore, the possible answers include: answer{i}, alt{i}"
    )


def pipeline_mock(manifest: Manifest, k: int = 3, max_concurrency: int = 4):
    """Matcher mock covering plan, compose, and judge calls per sample.

    Matchers key on contiguous template text around the question, so the
    same backend serves any stage for any sample, in any order.
    """
    steps = []
    for idx, s in enumerate(manifest.samples):
        steps.append((f"Question: {s.question}\n\nPropose", plan_response(idx, k)))
        steps.append((f"Question: {s.question}\nvision path:", compose_response(idx)))
        steps.append((f"Question: {s.question}\n\nCandidates:", f"fine. BEST: {1 + idx % k}"))
    return script_mock(steps, max_concurrency=max_concurrency)


def inference_mock(manifest: Manifest, max_concurrency: int = 4):
    steps = [(s.question, trace_response(idx)) for idx, s in enumerate(manifest.samples)]
    return script_mock(steps, max_concurrency=max_concurrency)


def write_manifest_file(path, manifest: Manifest) -> str:
    with open(path, "w", encoding="utf-8") as fh:
        for s in manifest.samples:
            fh.write(
                json.dumps(
                    {
                        "id": s.id,
                        "image": s.image_ref,
                        "question": s.question,
                        "answers": list(s.answers),
                        "split": s.split,
                        "dataset": s.dataset,
                    }
                )
                + "\n"
            )
    return str(path)


@pytest.fixture
def manifest20() -> Manifest:
    return make_manifest(20)
