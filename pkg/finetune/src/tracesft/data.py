"""Loading and validating the exported trace-dataset transcripts.

The input is the builder's JSONL output: each record carries a `messages`
chat transcript (system, user, assistant). Only the assistant turn is a
training target; everything before it is prompt context. Schema problems
abort before any training, naming the offending record.
"""

from __future__ import annotations

import json
from dataclasses import dataclass


class DatasetSchemaError(Exception):
    pass


@dataclass(frozen=True)
class Transcript:
    record_id: str
    prompt: str   # system + user turns, flattened
    target: str   # assistant turn: the full trace + answer line


def _flatten_user(message: dict) -> str:
    content = message.get("content", "")
    image = message.get("image")
    return f"[image: {image}]\n{content}" if image else content


def load_transcripts(path: str) -> list[Transcript]:
    transcripts = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetSchemaError(f"line {line_no}: invalid JSON ({exc.msg})")
            record_id = str(record.get("sample_id", f"line{line_no}"))
            messages = record.get("messages")
            if not isinstance(messages, list) or not messages:
                raise DatasetSchemaError(f"record {record_id}: missing messages")
            by_role: dict[str, list[dict]] = {}
            for m in messages:
                by_role.setdefault(m.get("role", ""), []).append(m)
            if "assistant" not in by_role:
                raise DatasetSchemaError(f"record {record_id}: missing assistant turn")
            if "user" not in by_role:
                raise DatasetSchemaError(f"record {record_id}: missing user turn")
            prompt_parts = [m.get("content", "") for m in by_role.get("system", [])]
            prompt_parts += [_flatten_user(m) for m in by_role["user"]]
            target = by_role["assistant"][-1].get("content", "")
            if not target.strip():
                raise DatasetSchemaError(f"record {record_id}: empty assistant turn")
            transcripts.append(
                Transcript(record_id=record_id, prompt="\n".join(prompt_parts), target=target)
            )
    if not transcripts:
        raise DatasetSchemaError(f"{path}: no records")
    return transcripts


class WordTokenizer:
    """Deterministic whitespace tokenizer with a dataset-derived vocab.

    Stand-in for a real model's tokenizer; ids are assigned in first-seen
    order so the mapping is reproducible from the same dataset bytes.
    """

    PAD, BOS, EOS, UNK = 0, 1, 2, 3

    def __init__(self, transcripts: list[Transcript]):
        self.vocab: dict[str, int] = {}
        for t in transcripts:
            for word in (t.prompt + " " + t.target).split():
                if word not in self.vocab:
                    self.vocab[word] = 4 + len(self.vocab)

    def __len__(self) -> int:
        return 4 + len(self.vocab)

    def encode(self, text: str) -> list[int]:
        return [self.vocab.get(w, self.UNK) for w in text.split()]
