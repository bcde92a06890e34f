"""Synthetic answer-the-prompt environments with binary verifiers.

copy_seq   -- answer must reproduce the prompt exactly.
parity_sum -- answer must be a bitstring of prompt length whose XOR parity
              matches the prompt's; half of all bitstrings are correct.
"""

import logging
from typing import Literal, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.streams import Purpose, make_stream
from app.core.types import Prompt, Vocab

logger = logging.getLogger(__name__)

COPY_SEQ = "copy_seq"
PARITY_SUM = "parity_sum"


class EnvConfig(BaseModel):
    """Environment family and sizes"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    family: Literal["copy_seq", "parity_sum"] = COPY_SEQ
    vocab_size: int = Field(2, ge=2)
    prompt_len: int = Field(3, ge=1)
    max_response_len: int = Field(3, ge=1)
    seed: int = Field(0, ge=0)

    @model_validator(mode="before")
    @classmethod
    def _default_horizon(cls, data):
        # an omitted or zero horizon means "exactly prompt_len tokens"
        if isinstance(data, dict) and data.get("max_response_len") in (None, 0, "0", ""):
            data = {**data, "max_response_len": data.get("prompt_len", 3)}
        return data

    @model_validator(mode="after")
    def _check_lengths(self) -> "EnvConfig":
        if self.family == COPY_SEQ and self.max_response_len < self.prompt_len:
            raise ValueError("copy_seq needs max_response_len >= prompt_len")
        return self

    @property
    def vocab(self) -> Vocab:
        return Vocab(size=self.vocab_size)


def sample_prompt(config: EnvConfig, rng: np.random.Generator, prompt_id: str = "p0") -> Prompt:
    """Draw prompt tokens uniformly from the family's alphabet"""
    alphabet = config.vocab_size if config.family == COPY_SEQ else 2
    tokens = rng.integers(0, alphabet, size=config.prompt_len)
    return Prompt(id=prompt_id, tokens=tuple(int(t) for t in tokens), env_tag=config.family)


def draw_prompt(config: EnvConfig, draw_index: int, purpose: Purpose = Purpose.PROMPT) -> Prompt:
    """Prompt number ``draw_index`` of the stream for ``purpose``; deterministic"""
    prefix = "e" if purpose == Purpose.EVAL_PROMPT else "p"
    rng = make_stream(config.seed, purpose, draw_index)
    return sample_prompt(config, rng, prompt_id=f"{prefix}{draw_index}")


def verify(config: EnvConfig, prompt: Prompt, response: Sequence[int]) -> int:
    """Binary reward for a complete response. Total: any token sequence is judged."""
    response = tuple(int(t) for t in response)

    if config.family == COPY_SEQ:
        return int(response == tuple(prompt.tokens))

    # parity_sum
    if len(response) != config.prompt_len:
        return 0
    if any(t not in (0, 1) for t in response):
        return 0
    return int(sum(response) % 2 == sum(prompt.tokens) % 2)


def is_terminal(config: EnvConfig, response_so_far: Sequence[int]) -> bool:
    """Both families answer with exactly prompt_len tokens, capped by max_response_len"""
    n = len(response_so_far)
    return n >= config.prompt_len or n >= config.max_response_len


def is_truncated(config: EnvConfig, response: Sequence[int]) -> bool:
    """True when generation stopped at the length cap before a full answer"""
    return len(response) >= config.max_response_len and len(response) < config.prompt_len
