import json

import pytest
from click.testing import CliRunner

from tracevqa.builder import read_dataset
from tracevqa.cli import main

from support import (
    compose_response,
    make_manifest,
    plan_response,
    trace_response,
    write_manifest_file,
)


@pytest.fixture
def runner():
    return CliRunner()


def write_mock_script(tmp_path, manifest, k=3, name="mock.json"):
    steps = []
    for idx, s in enumerate(manifest.samples):
        steps.append([f"Question: {s.question}\n\nPropose", plan_response(idx, k)])
        steps.append([f"Question: {s.question}\nvision path:", compose_response(idx)])
        steps.append([f"Question: {s.question}\n\nCandidates:", f"BEST: {1 + idx % k}"])
    path = tmp_path / name
    path.write_text(json.dumps(steps))
    return str(path)


def write_inference_script(tmp_path, manifest, name="imock.json"):
    steps = [[s.question, trace_response(i)] for i, s in enumerate(manifest.samples)]
    path = tmp_path / name
    path.write_text(json.dumps(steps))
    return str(path)


@pytest.fixture
def workspace(tmp_path):
    manifest = make_manifest(4)
    return {
        "manifest": write_manifest_file(tmp_path / "m.jsonl", manifest),
        "mock": write_mock_script(tmp_path, manifest),
        "imock": write_inference_script(tmp_path, manifest),
        "tmp": tmp_path,
        "manifest_obj": manifest,
    }


def test_build_dataset_command(runner, workspace):
    out = str(workspace["tmp"] / "daug.jsonl")
    result = runner.invoke(
        main,
        [
            "build-dataset",
            "--manifest", workspace["manifest"],
            "--mock-script", workspace["mock"],
            "--out", out,
            "--cache-dir", str(workspace["tmp"] / "cache"),
            "--k", "3",
            "--seed", "42",
        ],
    )
    assert result.exit_code == 0, result.output
    records = read_dataset(out)
    assert len(records) == 4
    assert all(r["variant"] == "full" for r in records)


def test_missing_required_flag_exits_2(runner, workspace):
    result = runner.invoke(main, ["build-dataset", "--manifest", workspace["manifest"]])
    assert result.exit_code == 2


def test_runtime_error_exits_1_with_json(runner, workspace, tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"id": "q1"}\n')
    result = runner.invoke(
        main,
        [
            "build-dataset",
            "--manifest", str(bad),
            "--out", str(tmp_path / "o.jsonl"),
            "--cache-dir", str(tmp_path / "c"),
        ],
    )
    assert result.exit_code == 1
    record = json.loads(result.output.strip().splitlines()[-1])
    assert record["error"] == "MalformedRecord"


def test_infer_and_eval_commands(runner, workspace):
    preds = str(workspace["tmp"] / "preds.jsonl")
    result = runner.invoke(
        main,
        [
            "infer",
            "--manifest", workspace["manifest"],
            "--mock-script", workspace["imock"],
            "--out", preds,
        ],
    )
    assert result.exit_code == 0, result.output

    report_out = str(workspace["tmp"] / "report.json")
    result = runner.invoke(
        main,
        [
            "eval",
            "--manifest", workspace["manifest"],
            "--predictions", preds,
            "--report-out", report_out,
            "--source", "okvqa",
            "--target", "okvqa",
        ],
    )
    assert result.exit_code == 0, result.output
    assert "accuracy: 1.0000" in result.output
    report = json.loads(open(report_out).read())
    assert report["n_samples"] == 4
    assert report["source"] == "okvqa"


def test_ablate_command(runner, workspace):
    out_base = str(workspace["tmp"] / "abl")
    result = runner.invoke(
        main,
        [
            "ablate",
            "--manifest", workspace["manifest"],
            "--mock-script", workspace["mock"],
            "--out", out_base,
            "--cache-dir", str(workspace["tmp"] / "cache"),
            "no_paths", "no_selector",
        ],
    )
    assert result.exit_code == 0, result.output
    no_paths = read_dataset(out_base + ".no_paths.jsonl")
    assert all("path:" not in r["target_text"] for r in no_paths)
    no_selector = read_dataset(out_base + ".no_selector.jsonl")
    assert len(no_selector) == 4


def test_sweep_k_command(runner, workspace):
    out_base = str(workspace["tmp"] / "sweep")
    mock = write_mock_script(workspace["tmp"], workspace["manifest_obj"], k=2, name="mock2.json")
    result = runner.invoke(
        main,
        [
            "sweep-k",
            "--manifest", workspace["manifest"],
            "--mock-script", mock,
            "--out", out_base,
            "--cache-dir", str(workspace["tmp"] / "cache_sweep"),
            "--k-max", "2",
        ],
    )
    assert result.exit_code == 0, result.output
    rows = json.loads(open(out_base + ".sweep.json").read())
    assert [row["k"] for row in rows] == [1, 2]
    for row in rows:
        assert len(read_dataset(row["out"])) == 4


def test_inspect_command(runner, workspace):
    out = str(workspace["tmp"] / "daug.jsonl")
    cache_dir = str(workspace["tmp"] / "cache_inspect")
    runner.invoke(
        main,
        [
            "build-dataset",
            "--manifest", workspace["manifest"],
            "--mock-script", workspace["mock"],
            "--out", out,
            "--cache-dir", cache_dir,
        ],
    )
    result = runner.invoke(main, ["inspect", "--cache-dir", cache_dir, "q0"])
    assert result.exit_code == 0, result.output
    assert "stage: plan" in result.output
    assert "stage: select" in result.output


def test_config_file_with_flag_override(runner, workspace, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "manifest = {m}\nmock-script = {s}\ncache-dir = {c}\nseed = 7\n".format(
            m=workspace["manifest"],
            s=workspace["mock"],
            c=str(tmp_path / "cache_cfg"),
        )
    )
    out = str(tmp_path / "from_cfg.jsonl")
    result = runner.invoke(
        main, ["build-dataset", "--config", str(cfg), "--out", out, "--seed", "42"]
    )
    assert result.exit_code == 0, result.output
    records = read_dataset(out)
    assert records[0]["provenance"]["seed"] == 42  # flag overrides file
