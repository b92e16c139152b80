"""Command-line entry point.

Subcommands: build-dataset, infer, eval, sweep-k, ablate, inspect.
Configuration comes from a flat key=value file plus flags (flags win);
every output file embeds the config hash it was produced under. Usage
errors exit 2; runtime errors exit 1 with a JSON error record on stderr.
"""

from __future__ import annotations

import json
import sys
import time

import click

from .builder import PipelineConfig, StageCache, VARIANTS, build_dataset
from .client import BackendConfig, MockBackend, make_backend, script_mock
from .composer import ComposerConfig
from .corpus import load_manifest
from .errors import TraceVQAError
from .evaluator import evaluate, write_report
from .inference import read_predictions, run_inference
from .planner import PlannerConfig, default_k
from .selector import MODE_JUDGE, SelectorConfig


def _read_config_file(path: str) -> dict:
    """Flat key=value lines; '#' starts a comment."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise click.UsageError(f"bad config line: {raw.strip()!r}")
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _merged(ctx_params: dict, config_file: str | None) -> dict:
    merged = dict(_read_config_file(config_file)) if config_file else {}
    for key, value in ctx_params.items():
        if value is not None:
            merged[key] = value
    return merged


def _make_backend(opts: dict):
    kind = opts.get("backend", "mock")
    if kind == "mock":
        script_path = opts.get("mock_script")
        if script_path:
            with open(script_path, encoding="utf-8") as fh:
                steps = [tuple(step) for step in json.load(fh)]
            return script_mock(steps, max_concurrency=int(opts.get("max_concurrency", 4)))
        return MockBackend(max_concurrency=int(opts.get("max_concurrency", 4)))
    cfg = BackendConfig(
        kind="live",
        endpoint=opts.get("backend_url", ""),
        model=opts.get("model", ""),
        max_concurrency=int(opts.get("max_concurrency", 4)),
    )
    return make_backend(cfg)


def _pipeline_config(opts: dict, variant: str | None = None) -> PipelineConfig:
    k = opts.get("k")
    seed = int(opts.get("seed", 42))
    return PipelineConfig(
        planner=PlannerConfig(
            k=int(k) if k is not None else default_k(opts.get("dataset", "okvqa")),
            temperature=float(opts.get("temperature_plan", 0.8)),
        ),
        composer=ComposerConfig(
            temperature=float(opts.get("temperature_compose", 0.2)),
            min_side_coverage=float(opts.get("min_side_coverage", 1e-9)),
        ),
        selector=SelectorConfig(
            mode=MODE_JUDGE,
            temperature=float(opts.get("temperature_judge", 0.2)),
        ),
        variant=variant or opts.get("variant", "full"),
        seed=seed,
        model_id=opts.get("model", "mock"),
        workers=int(opts.get("workers", 1)),
    )


def _fail(exc: Exception) -> None:
    record = {"error": type(exc).__name__, "message": str(exc)}
    click.echo(json.dumps(record), err=True)
    sys.exit(1)


def common_options(fn):
    for option in reversed(
        [
            click.option("--config", "config_file", type=click.Path(exists=True)),
            click.option("--manifest", type=click.Path()),
            click.option("--backend", type=click.Choice(["live", "mock"])),
            click.option("--backend-url"),
            click.option("--model"),
            click.option("--mock-script", type=click.Path(exists=True)),
            click.option("--k", type=int),
            click.option("--seed", type=int),
            click.option("--cache-dir"),
            click.option("--out"),
            click.option("--max-concurrency", type=int),
            click.option("--workers", type=int),
            click.option("--temperature-plan", type=float),
            click.option("--temperature-compose", type=float),
            click.option("--temperature-judge", type=float),
            click.option("--min-side-coverage", type=float),
        ]
    ):
        fn = option(fn)
    return fn


@click.group()
def main():
    """Reasoning-trace dataset construction, inference, and evaluation."""


def _require(opts: dict, *keys: str) -> None:
    for key in keys:
        if not opts.get(key):
            raise click.UsageError(f"missing required option --{key.replace('_', '-')}")


@main.command("build-dataset")
@common_options
@click.option("--variant", type=click.Choice(VARIANTS))
def build_dataset_cmd(config_file, **params):
    """Build the augmented dataset for one variant."""
    opts = _merged(params, config_file)
    _require(opts, "manifest", "out", "cache_dir")
    try:
        manifest = load_manifest(opts["manifest"])
        cfg = _pipeline_config(opts)
        backend = _make_backend(opts)
        stats = build_dataset(manifest, cfg, backend, opts["out"], opts["cache_dir"])
        click.echo(json.dumps(stats.to_dict(), sort_keys=True))
    except TraceVQAError as exc:
        _fail(exc)


@main.command("infer")
@common_options
@click.option("--predictions-out")
def infer_cmd(config_file, predictions_out, **params):
    """Single-pass structured inference over a manifest."""
    opts = _merged(params, config_file)
    out = predictions_out or opts.get("predictions_out") or opts.get("out")
    if not opts.get("manifest") or not out:
        raise click.UsageError("infer requires --manifest and --out")
    try:
        manifest = load_manifest(opts["manifest"])
        backend = _make_backend(opts)
        predictions = run_inference(manifest, backend, out, seed=int(opts.get("seed", 42)))
        click.echo(json.dumps({"n_predictions": len(predictions), "out": out}))
    except TraceVQAError as exc:
        _fail(exc)


@main.command("eval")
@common_options
@click.option("--predictions", type=click.Path(exists=True), required=True)
@click.option("--source", default="")
@click.option("--target", default="")
@click.option("--report-out")
def eval_cmd(config_file, predictions, source, target, report_out, **params):
    """Score a predictions file against a manifest."""
    opts = _merged(params, config_file)
    _require(opts, "manifest")
    try:
        manifest = load_manifest(opts["manifest"])
        report = evaluate(
            read_predictions(predictions),
            manifest,
            source=source,
            target=target,
            config={"seed": int(opts.get("seed", 42))},
        )
        click.echo(report.table())
        if report_out:
            write_report(report, report_out)
    except TraceVQAError as exc:
        _fail(exc)


@main.command("sweep-k")
@common_options
@click.option("--k-max", type=int, required=True)
@click.option("--variant", type=click.Choice(VARIANTS))
def sweep_k_cmd(config_file, k_max, **params):
    """Build one dataset per K in 1..k_max and report per-K cost."""
    opts = _merged(params, config_file)
    _require(opts, "manifest", "out", "cache_dir")
    try:
        manifest = load_manifest(opts["manifest"])
        backend = _make_backend(opts)
        rows = []
        for k in range(1, k_max + 1):
            cfg = _pipeline_config({**opts, "k": k})
            out = f"{opts['out']}.k{k}.jsonl"
            start = time.monotonic()
            stats = build_dataset(manifest, cfg, backend, out, opts["cache_dir"])
            rows.append(
                {
                    "k": k,
                    "wall_time_s": round(time.monotonic() - start, 3),
                    "out": out,
                    **stats.to_dict(),
                }
            )
        click.echo(f"{'K':>3} {'time(s)':>9} {'degraded':>9} {'low_cov':>8}")
        for row in rows:
            click.echo(
                f"{row['k']:>3} {row['wall_time_s']:>9.3f} "
                f"{row['degraded']:>9} {row['low_coverage']:>8}"
            )
        with open(f"{opts['out']}.sweep.json", "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2, sort_keys=True)
    except TraceVQAError as exc:
        _fail(exc)


@main.command("ablate")
@common_options
@click.argument("variants", nargs=-1, required=True, type=click.Choice(VARIANTS))
def ablate_cmd(config_file, variants, **params):
    """Build one dataset per requested ablation variant."""
    opts = _merged(params, config_file)
    _require(opts, "manifest", "out", "cache_dir")
    try:
        manifest = load_manifest(opts["manifest"])
        backend = _make_backend(opts)
        for variant in variants:
            cfg = _pipeline_config(opts, variant=variant)
            out = f"{opts['out']}.{variant}.jsonl"
            stats = build_dataset(manifest, cfg, backend, out, opts["cache_dir"])
            click.echo(json.dumps({"variant": variant, "out": out, **stats.to_dict()}))
    except TraceVQAError as exc:
        _fail(exc)


@main.command("inspect")
@common_options
@click.argument("sample_id")
def inspect_cmd(config_file, sample_id, **params):
    """Pretty-print every cached stage artifact for one sample."""
    opts = _merged(params, config_file)
    _require(opts, "cache_dir")
    cache = StageCache(opts["cache_dir"])
    entries = cache.entries_for(sample_id)
    if not entries:
        click.echo(f"no cached artifacts for sample {sample_id!r}")
        return
    for entry in entries:
        click.echo(f"--- {entry['file']} (stage: {entry['stage']})")
        click.echo(json.dumps(entry["data"], indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
