"""Dataset builder: plan -> compose -> select per training sample.

Writes one augmented record per sample (never skips; failures degrade to
flagged fallback records), renders the target sequence for the requested
ablation variant, and caches every stage output so a killed run resumes
to byte-identical output.

Target layout follows the rendered trace format (vision path line, text
path line, explanation, answer line). Ablation variants omit lines:

    full            all four parts
    no_paths        drop both path lines
    no_content      drop the explanation
    no_text_path    drop the text path line
    no_vision_path  drop the vision path line
    no_selector     same layout as full; selection runs in random mode
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

from .client import Backend
from .composer import (
    ComposerConfig,
    Triplet,
    compose,
    filter_candidates,
    make_triplet,
)
from .corpus import ImagePayload, Manifest, Sample, resolve_image
from .errors import (
    AllFiltered,
    ComposeFailed,
    CorpusError,
    PlanningFailed,
)
from .planner import PlannerConfig, PlanStats, plan_candidates
from .relpath import DualPath, parse_path, render_path
from .selector import MODE_RANDOM, SelectorConfig, Verdict, select_best
from .templates import DEFAULT_TEMPLATES, load_template

log = logging.getLogger(__name__)

ANSWER_MARKER = "Therefore, the possible answers include:"

VARIANTS = ("full", "no_paths", "no_content", "no_text_path", "no_vision_path", "no_selector")


@dataclass(frozen=True)
class PipelineConfig:
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    composer: ComposerConfig = field(default_factory=ComposerConfig)
    selector: SelectorConfig = field(default_factory=SelectorConfig)
    variant: str = "full"
    seed: int = 42
    model_id: str = "mock"
    workers: int = 1
    image_base_dir: str = "."
    attach_images: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")

    @property
    def selector_mode(self) -> str:
        # the no-selector ablation replaces the judge with seeded random choice
        return MODE_RANDOM if self.variant == "no_selector" else self.selector.mode


def _hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _template_digest(template_id: str, templates_dir: str | None) -> str:
    return hashlib.sha256(
        load_template(template_id, templates_dir).encode("utf-8")
    ).hexdigest()[:16]


def stage_hashes(cfg: PipelineConfig) -> dict[str, str]:
    """Per-stage config hashes; each stage folds in its upstream hash so a
    changed knob invalidates exactly the stages it can affect."""
    plan_h = _hash(
        {
            "template": _template_digest(cfg.planner.prompt_template_id, cfg.planner.templates_dir),
            "k": cfg.planner.k,
            "max_retries": cfg.planner.max_retries_per_sample,
            "temperature": cfg.planner.temperature,
            "model": cfg.model_id,
            "seed": cfg.seed,
        }
    )
    compose_h = _hash(
        {
            "upstream": plan_h,
            "template": _template_digest(cfg.composer.prompt_template_id, cfg.composer.templates_dir),
            "temperature": cfg.composer.temperature,
            "max_retries": cfg.composer.max_retries,
            "min_side_coverage": cfg.composer.min_side_coverage,
            "model": cfg.model_id,
        }
    )
    select_h = _hash(
        {
            "upstream": compose_h,
            "template": _template_digest(cfg.selector.prompt_template_id, cfg.selector.templates_dir),
            "temperature": cfg.selector.temperature,
            "mode": cfg.selector_mode,
            "seed": cfg.seed,
            "model": cfg.model_id,
        }
    )
    return {"plan": plan_h, "compose": compose_h, "select": select_h}


def config_hash(cfg: PipelineConfig) -> str:
    return _hash({**stage_hashes(cfg), "variant": cfg.variant})


class StageCache:
    """One JSON blob per (sample_id, stage, config_hash) key, written
    at most once via atomic rename."""

    def __init__(self, cache_dir: str):
        self.cache_dir = cache_dir
        os.makedirs(cache_dir, exist_ok=True)
        self.hits = 0
        self.misses = 0

    def _path(self, sample_id: str, stage: str, cfg_hash: str) -> str:
        safe = hashlib.sha256(sample_id.encode("utf-8")).hexdigest()[:16]
        return os.path.join(self.cache_dir, f"{safe}__{stage}__{cfg_hash}.json")

    def get(self, sample_id: str, stage: str, cfg_hash: str):
        path = self._path(sample_id, stage, cfg_hash)
        if os.path.isfile(path):
            self.hits += 1
            with open(path, encoding="utf-8") as fh:
                return json.load(fh)
        self.misses += 1
        return None

    def put(self, sample_id: str, stage: str, cfg_hash: str, blob) -> None:
        path = self._path(sample_id, stage, cfg_hash)
        if os.path.isfile(path):  # append-only: first write wins
            return
        payload = {"sample_id": sample_id, "stage": stage, "data": blob}
        fd, tmp = tempfile.mkstemp(dir=self.cache_dir, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True)
        os.replace(tmp, path)

    def entries_for(self, sample_id: str) -> list[dict]:
        safe = hashlib.sha256(sample_id.encode("utf-8")).hexdigest()[:16]
        out = []
        for name in sorted(os.listdir(self.cache_dir)):
            if name.startswith(safe + "__") and name.endswith(".json"):
                with open(os.path.join(self.cache_dir, name), encoding="utf-8") as fh:
                    out.append({"file": name, **json.load(fh)})
        return out


@dataclass(frozen=True)
class AugmentedRecord:
    sample_id: str
    question: str
    image_ref: str
    answer: str
    variant: str
    vision_path: str
    text_path: str
    explanation: str
    target_text: str
    provenance: dict
    low_coverage: bool = False
    degraded: str | None = None

    def to_json(self) -> str:
        obj = asdict(self)
        obj["messages"] = self.messages()
        return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)

    def messages(self) -> list[dict]:
        """Ready-to-train chat transcript for SFT toolchains."""
        system = load_template(DEFAULT_TEMPLATES["infer_system"]).strip()
        return [
            {"role": "system", "content": system},
            {
                "role": "user",
                "content": self.question,
                "image": self.image_ref,
            },
            {"role": "assistant", "content": self.target_text},
        ]


def render_target(t: Triplet, answer: str, variant: str = "full") -> str:
    """Render the training target sequence for one variant."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    lines = []
    if variant not in ("no_paths", "no_vision_path"):
        lines.append(f"vision path: {render_path(t.dual_path.vision_path)}")
    if variant not in ("no_paths", "no_text_path"):
        lines.append(f"text path: {render_path(t.dual_path.text_path)}")
    if variant != "no_content":
        lines.append(t.explanation)
    lines.append(f"{ANSWER_MARKER} {answer}")
    return "\n".join(lines)


def gold_answer(answers: tuple[str, ...] | list[str]) -> str:
    """Most frequent annotator answer; ties break lexicographically.
    Single-answer lists (FVQA) reduce to that answer."""
    counts = Counter(answers)
    return min(counts, key=lambda a: (-counts[a], a))


def build_record(
    s: Sample,
    triplets: list[Triplet],
    verdict: Verdict,
    variant: str,
    provenance: dict | None = None,
    low_coverage: bool = False,
) -> AugmentedRecord:
    selected = triplets[verdict.best_index - 1]
    answer = gold_answer(s.answers)
    prov = dict(provenance or {})
    prov.setdefault("selector_mode", verdict.mode)
    prov.setdefault("best_index", verdict.best_index)
    prov.setdefault("selector_fallback", verdict.fallback)
    return AugmentedRecord(
        sample_id=s.id,
        question=s.question,
        image_ref=s.image_ref,
        answer=answer,
        variant=variant,
        vision_path=render_path(selected.dual_path.vision_path),
        text_path=render_path(selected.dual_path.text_path),
        explanation=selected.explanation,
        target_text=render_target(selected, answer, variant),
        provenance=prov,
        low_coverage=low_coverage,
    )


def _degraded_record(s: Sample, variant: str, reason: str, provenance: dict) -> AugmentedRecord:
    answer = gold_answer(s.answers)
    return AugmentedRecord(
        sample_id=s.id,
        question=s.question,
        image_ref=s.image_ref,
        answer=answer,
        variant=variant,
        vision_path="",
        text_path="",
        explanation="",
        target_text=f"{ANSWER_MARKER} {answer}",
        provenance=provenance,
        low_coverage=True,
        degraded=reason,
    )


def _load_image(s: Sample, cfg: PipelineConfig) -> ImagePayload | None:
    if not cfg.attach_images:
        return None
    try:
        return resolve_image(s, cfg.image_base_dir)
    except CorpusError as exc:
        log.warning("sample %s: image unavailable (%s); continuing without", s.id, exc)
        return None


def augment_sample(
    s: Sample,
    cfg: PipelineConfig,
    backend: Backend,
    cache: StageCache,
    stats: "BuildStats",
) -> AugmentedRecord:
    """Run (or replay from cache) the three stages for one sample."""
    hashes = stage_hashes(cfg)
    image = _load_image(s, cfg)
    base_prov = {
        "config_hash": config_hash(cfg),
        "k": cfg.planner.k,
        "seed": cfg.seed,
        "model": cfg.model_id,
        "plan_template": cfg.planner.prompt_template_id,
        "compose_template": cfg.composer.prompt_template_id,
        "judge_template": cfg.selector.prompt_template_id,
        "min_side_coverage": cfg.composer.min_side_coverage,
    }

    # --- plan ---
    cached = cache.get(s.id, "plan", hashes["plan"])
    plan_blob = cached["data"] if cached else None
    if plan_blob is None:
        pstats = PlanStats()
        try:
            pairs = plan_candidates(s, cfg.planner, backend, image, pstats)
            plan_blob = {
                "pairs": [[render_path(d.text_path), render_path(d.vision_path)] for d in pairs],
                "dropped": pstats.dropped_unparsable + pstats.dropped_duplicate,
                "calls": pstats.calls,
            }
        except PlanningFailed as exc:
            plan_blob = {"pairs": None, "error": str(exc)}
        cache.put(s.id, "plan", hashes["plan"], plan_blob)
    if plan_blob["pairs"] is None:
        stats.degraded += 1
        prov = {**base_prov, "dropped_candidates": 0}
        return _degraded_record(s, cfg.variant, "plan_failed", prov)
    pairs = [
        DualPath(text_path=parse_path(t), vision_path=parse_path(v))
        for t, v in plan_blob["pairs"]
    ]

    # --- compose ---
    cached = cache.get(s.id, "compose", hashes["compose"])
    compose_blob = cached["data"] if cached else None
    if compose_blob is None:
        explanations: list[str | None] = []
        for d in pairs:
            try:
                explanations.append(compose(s, d, backend, cfg.composer, image))
            except ComposeFailed as exc:
                log.warning("sample %s: %s", s.id, exc)
                explanations.append(None)
        regen: list[str | None] | None = None
        if _needs_regen(pairs, explanations, cfg.composer.min_side_coverage):
            regen = []
            for d in pairs:
                try:
                    regen.append(compose(s, d, backend, cfg.composer, image))
                except ComposeFailed:
                    regen.append(None)
        compose_blob = {"explanations": explanations, "regen": regen}
        cache.put(s.id, "compose", hashes["compose"], compose_blob)

    kept, dropped, low_coverage = _assemble_and_filter(
        pairs, compose_blob, cfg.composer.min_side_coverage
    )
    if kept is None:
        stats.degraded += 1
        prov = {**base_prov, "dropped_candidates": plan_blob.get("dropped", 0)}
        return _degraded_record(s, cfg.variant, "compose_failed", prov)
    if low_coverage:
        stats.low_coverage += 1

    # --- select ---
    cached = cache.get(s.id, "select", hashes["select"])
    select_blob = cached["data"] if cached else None
    if select_blob is None:
        verdict = select_best(
            s,
            kept,
            backend=backend,
            mode=cfg.selector_mode,
            seed=_sample_seed(cfg.seed, s.id),
            cfg=cfg.selector,
            image=image,
        )
        select_blob = {
            "best_index": verdict.best_index,
            "mode": verdict.mode,
            "judge_raw": verdict.judge_raw,
            "fallback": verdict.fallback,
        }
        cache.put(s.id, "select", hashes["select"], select_blob)
    verdict = Verdict(
        best_index=select_blob["best_index"],
        mode=select_blob["mode"],
        judge_raw=select_blob.get("judge_raw", ""),
        fallback=select_blob.get("fallback", False),
    )
    if verdict.fallback:
        stats.selector_fallbacks += 1

    prov = {
        **base_prov,
        "dropped_candidates": plan_blob.get("dropped", 0) + len(dropped),
        "plan_calls": plan_blob.get("calls", 1),
        "low_coverage": low_coverage,
    }
    return build_record(s, kept, verdict, cfg.variant, prov, low_coverage=low_coverage)


def _sample_seed(seed: int, sample_id: str) -> int:
    """Per-sample derivation keeps random-mode picks independent of
    manifest order while staying reproducible."""
    digest = hashlib.sha256(f"{seed}:{sample_id}".encode("utf-8")).hexdigest()
    return int(digest[:8], 16)


def _triplets_from(pairs, explanations) -> list[Triplet]:
    out = []
    for i, (d, e) in enumerate(zip(pairs, explanations)):
        if e is not None and e.strip():
            out.append(make_triplet(d, e, candidate_index=i))
    return out


def _needs_regen(pairs, explanations, threshold) -> bool:
    triplets = _triplets_from(pairs, explanations)
    if not triplets:
        return False  # compose itself failed; regen handled as degraded
    try:
        filter_candidates(triplets, threshold)
        return False
    except AllFiltered:
        return True


def _assemble_and_filter(pairs, compose_blob, threshold):
    """Returns (kept, dropped, low_coverage_flag); kept None = degraded."""
    triplets = _triplets_from(pairs, compose_blob["explanations"])
    if not triplets:
        return None, [], False
    try:
        kept, dropped = filter_candidates(triplets, threshold)
        return kept, dropped, False
    except AllFiltered:
        pass
    if compose_blob.get("regen"):
        regen_triplets = _triplets_from(pairs, compose_blob["regen"])
        if regen_triplets:
            try:
                kept, dropped = filter_candidates(regen_triplets, threshold)
                return kept, dropped, False
            except AllFiltered:
                triplets = regen_triplets
    # keep the single best min-side-coverage triplet, flagged low_coverage
    best = max(triplets, key=lambda t: (t.min_side_coverage, -t.candidate_index))
    dropped = [t for t in triplets if t is not best]
    return [best], dropped, True


@dataclass
class BuildStats:
    n_samples: int = 0
    cache_hits: int = 0
    cache_misses: int = 0
    degraded: int = 0
    low_coverage: int = 0
    selector_fallbacks: int = 0
    config_hash: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def build_dataset(
    manifest: Manifest,
    cfg: PipelineConfig,
    backend: Backend,
    out_path: str,
    cache_dir: str,
) -> BuildStats:
    """Produce exactly one record per sample, in manifest order.

    Stage outputs are cached as they complete, so an interrupted run
    resumes from cache and yields byte-identical output.
    """
    cache = StageCache(cache_dir)
    stats = BuildStats(n_samples=len(manifest.samples), config_hash=config_hash(cfg))

    def run(sample: Sample) -> AugmentedRecord:
        return augment_sample(sample, cfg, backend, cache, stats)

    if cfg.workers <= 1:
        records = [run(s) for s in manifest.samples]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(run, manifest.samples))

    stats.cache_hits = cache.hits
    stats.cache_misses = cache.misses
    os.makedirs(os.path.dirname(os.path.abspath(out_path)), exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(record.to_json() + "\n")
    with open(out_path + ".stats.json", "w", encoding="utf-8") as fh:
        json.dump(stats.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return stats


def read_dataset(path: str) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
