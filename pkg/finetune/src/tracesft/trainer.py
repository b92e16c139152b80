"""Adapter fine-tuning on trace transcripts.

The loss is token-level cross-entropy over the assistant turn only:
prompt tokens carry the ignore label, so the paths + explanation +
answer sequence is exactly what the model is trained to emit.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field

import torch
import torch.nn.functional as F

from .data import Transcript, WordTokenizer, load_transcripts
from .model import TinyCausalLM, adapter_state_dict, apply_lora, trainable_parameters

IGNORE_INDEX = -100


@dataclass(frozen=True)
class TrainConfig:
    dataset_path: str
    out_dir: str = "adapter_out"
    learning_rate: float = 1e-4
    batch_size: int = 4
    grad_accumulation: int = 4  # effective batch 16
    lora_rank: int = 32
    lora_alpha: float = 64.0
    epochs: int = 3
    max_steps: int | None = None
    seed: int = 42
    d_model: int = 64
    max_length: int = 256

    def __post_init__(self):
        for name in ("learning_rate", "batch_size", "grad_accumulation", "lora_rank", "lora_alpha", "epochs"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class TrainResult:
    losses: list[float] = field(default_factory=list)
    adapter_path: str = ""
    loss_curve_path: str = ""
    steps: int = 0

    @property
    def first_step_loss(self) -> float:
        return self.losses[0]


def encode_example(t: Transcript, tokenizer: WordTokenizer, max_length: int):
    """Token ids plus labels; prompt and BOS positions are masked out."""
    prompt_ids = [tokenizer.BOS] + tokenizer.encode(t.prompt)
    target_ids = tokenizer.encode(t.target) + [tokenizer.EOS]
    ids = (prompt_ids + target_ids)[:max_length]
    labels = ([IGNORE_INDEX] * len(prompt_ids) + target_ids)[:max_length]
    return ids, labels


def collate(batch, pad_id: int):
    width = max(len(ids) for ids, _ in batch)
    ids = torch.full((len(batch), width), pad_id, dtype=torch.long)
    labels = torch.full((len(batch), width), IGNORE_INDEX, dtype=torch.long)
    for row, (example_ids, example_labels) in enumerate(batch):
        ids[row, : len(example_ids)] = torch.tensor(example_ids)
        labels[row, : len(example_labels)] = torch.tensor(example_labels)
    return ids, labels


def shifted_loss(logits: torch.Tensor, labels: torch.Tensor, reduction: str = "mean") -> torch.Tensor:
    """Next-token cross-entropy; ignored labels contribute nothing."""
    shift_logits = logits[:, :-1, :].reshape(-1, logits.shape[-1])
    shift_labels = labels[:, 1:].reshape(-1)
    return F.cross_entropy(
        shift_logits, shift_labels, ignore_index=IGNORE_INDEX, reduction=reduction
    )


def train(cfg: TrainConfig) -> TrainResult:
    transcripts = load_transcripts(cfg.dataset_path)  # schema abort happens here
    tokenizer = WordTokenizer(transcripts)

    torch.manual_seed(cfg.seed)
    model = TinyCausalLM(vocab_size=len(tokenizer), d_model=cfg.d_model)
    apply_lora(model, rank=cfg.lora_rank, alpha=cfg.lora_alpha)
    optimizer = torch.optim.AdamW(trainable_parameters(model), lr=cfg.learning_rate)

    examples = [encode_example(t, tokenizer, cfg.max_length) for t in transcripts]
    batches = [
        collate(examples[i : i + cfg.batch_size], tokenizer.PAD)
        for i in range(0, len(examples), cfg.batch_size)
    ]

    result = TrainResult()
    os.makedirs(cfg.out_dir, exist_ok=True)
    loss_curve_path = os.path.join(cfg.out_dir, "loss_curve.jsonl")
    step = 0
    with open(loss_curve_path, "w", encoding="utf-8") as curve:
        done = False
        for epoch in range(cfg.epochs):
            for batch_no in range(0, len(batches), cfg.grad_accumulation):
                optimizer.zero_grad()
                chunk = batches[batch_no : batch_no + cfg.grad_accumulation]
                total = 0.0
                for ids, labels in chunk:
                    loss = shifted_loss(model(ids), labels) / len(chunk)
                    if not torch.isfinite(loss):
                        raise RuntimeError(
                            f"non-finite loss at step {step} (epoch {epoch}, batch {batch_no})"
                        )
                    loss.backward()
                    total += loss.item()
                optimizer.step()
                step += 1
                result.losses.append(total)
                curve.write(json.dumps({"step": step, "epoch": epoch, "loss": total}) + "\n")
                if cfg.max_steps is not None and step >= cfg.max_steps:
                    done = True
                    break
            if done:
                break

    adapter_path = os.path.join(cfg.out_dir, "adapter.pt")
    torch.save(
        {"config": asdict(cfg), "vocab_size": len(tokenizer), "adapter": adapter_state_dict(model)},
        adapter_path,
    )
    result.adapter_path = adapter_path
    result.loss_curve_path = loss_curve_path
    result.steps = step
    return result
