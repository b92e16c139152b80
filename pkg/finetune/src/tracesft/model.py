"""Tiny causal LM stand-in plus low-rank adapter wrapping.

The base model is a small decoder (embedding, a causal self-attention
block, an LM head). Adapters follow the usual low-rank recipe: frozen
base weight W plus (alpha/r) * B @ A, with A gaussian-initialized and B
zero so the wrapped layer starts exactly at the base function.
"""

from __future__ import annotations

import math

import torch
import torch.nn as nn


class LoRALinear(nn.Module):
    def __init__(self, base: nn.Linear, rank: int, alpha: float):
        super().__init__()
        self.base = base
        for p in self.base.parameters():
            p.requires_grad_(False)
        self.rank = rank
        self.scaling = alpha / rank
        self.lora_a = nn.Parameter(torch.empty(rank, base.in_features))
        self.lora_b = nn.Parameter(torch.zeros(base.out_features, rank))
        nn.init.kaiming_uniform_(self.lora_a, a=math.sqrt(5))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.base(x) + (x @ self.lora_a.T @ self.lora_b.T) * self.scaling


class TinyCausalLM(nn.Module):
    """Small stand-in decoder; real backbones are out of scope here."""

    def __init__(self, vocab_size: int, d_model: int = 64, n_heads: int = 4):
        super().__init__()
        self.embed = nn.Embedding(vocab_size, d_model)
        self.attn = nn.MultiheadAttention(d_model, n_heads, batch_first=True)
        self.norm = nn.LayerNorm(d_model)
        self.ff = nn.Sequential(nn.Linear(d_model, 4 * d_model), nn.GELU(), nn.Linear(4 * d_model, d_model))
        self.head = nn.Linear(d_model, vocab_size, bias=False)

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        x = self.embed(ids)
        n = ids.shape[1]
        mask = torch.triu(torch.ones(n, n, dtype=torch.bool, device=ids.device), diagonal=1)
        attended, _ = self.attn(x, x, x, attn_mask=mask, need_weights=False)
        x = self.norm(x + attended)
        x = self.norm(x + self.ff(x))
        return self.head(x)


def apply_lora(model: nn.Module, rank: int, alpha: float) -> nn.Module:
    """Freeze the base model and wrap its linear layers with adapters."""
    for p in model.parameters():
        p.requires_grad_(False)
    _wrap(model, rank, alpha)
    return model


def _wrap(module: nn.Module, rank: int, alpha: float) -> None:
    for name, child in module.named_children():
        if isinstance(child, nn.MultiheadAttention):
            continue  # fused projections; adapters go on the other linears
        if type(child) is nn.Linear:
            setattr(module, name, LoRALinear(child, rank, alpha))
        elif not isinstance(child, LoRALinear):
            _wrap(child, rank, alpha)


def adapter_state_dict(model: nn.Module) -> dict[str, torch.Tensor]:
    return {k: v for k, v in model.state_dict().items() if "lora_" in k}


def trainable_parameters(model: nn.Module):
    return [p for p in model.parameters() if p.requires_grad]
