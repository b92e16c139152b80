"""Low-rank-adapter SFT on exported reasoning-trace chat transcripts."""

from .data import DatasetSchemaError, Transcript, WordTokenizer, load_transcripts
from .model import LoRALinear, TinyCausalLM, apply_lora
from .trainer import IGNORE_INDEX, TrainConfig, TrainResult, encode_example, shifted_loss, train

__version__ = "0.1.0"
