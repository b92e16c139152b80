"""Builds a small real dataset file through the exporter pipeline; the
trainer only ever sees the file."""

import json

import pytest

from tracevqa.builder import PipelineConfig, build_dataset
from tracevqa.client import script_mock
from tracevqa.corpus import Manifest, Sample


def _mock(manifest, k=3):
    steps = []
    for idx, s in enumerate(manifest.samples):
        plan = "\n".join(
            f"vision path: obj{idx}.color → obj{idx}.shape_{j}\n"
            f"text path: obj{idx}.kind → obj{idx}.name_{j}"
            for j in range(k)
        )
        steps.append((f"Question: {s.question}\n\nPropose", plan))
        steps.append(
            (f"Question: {s.question}\nvision path:", f"the obj{idx} color shows its kind clearly")
        )
        steps.append((f"Question: {s.question}\n\nCandidates:", f"BEST: {1 + idx % k}"))
    return script_mock(steps)


@pytest.fixture(scope="session")
def dataset_path(tmp_path_factory) -> str:
    tmp = tmp_path_factory.mktemp("daug")
    samples = tuple(
        Sample(
            id=f"q{i}",
            image_ref=f"img/q{i}.jpg",
            question=f"what is object {i}?",
            answers=(f"thing{i}",) * 4 + (f"other{i}",) * 6,
        )
        for i in range(8)
    )
    manifest = Manifest(dataset_name="okvqa", samples=samples)
    out = str(tmp / "daug.jsonl")
    build_dataset(manifest, PipelineConfig(), _mock(manifest), out, str(tmp / "cache"))
    return out


@pytest.fixture
def broken_dataset(tmp_path, dataset_path) -> str:
    rows = [json.loads(line) for line in open(dataset_path)]
    rows[3]["messages"] = [m for m in rows[3]["messages"] if m["role"] != "assistant"]
    out = tmp_path / "broken.jsonl"
    out.write_text("".join(json.dumps(r) + "\n" for r in rows))
    return str(out)
