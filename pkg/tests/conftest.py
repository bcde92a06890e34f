import math
import os
from typing import Optional, Sequence

import numpy as np
import pytest

os.environ.setdefault("FORKPULSE_PROGRESS", "false")

from app.core.types import Prompt, PromptGroup, Trajectory  # noqa: E402
from app.envs.tasks import EnvConfig  # noqa: E402
from app.harness.settings import TrainConfig, parse_config  # noqa: E402
from app.policy.params import PolicyParams, init_params  # noqa: E402


def make_trajectory(response: Sequence[int], reward: int = 0, prompt_id: str = "p0",
                    logprobs: Optional[Sequence[float]] = None,
                    entropies: Optional[Sequence[float]] = None) -> Trajectory:
    n = len(response)
    return Trajectory(
        prompt_id=prompt_id,
        response=tuple(response),
        logprobs=tuple(logprobs) if logprobs is not None else (-math.log(2.0),) * n,
        entropies=tuple(entropies) if entropies is not None else (math.log(2.0),) * n,
        reward=reward,
    )


def make_group(prompt: Prompt, responses: Sequence[Sequence[int]], rewards: Sequence[int]) -> PromptGroup:
    return PromptGroup(
        prompt=prompt,
        trajectories=tuple(make_trajectory(r, w, prompt_id=prompt.id) for r, w in zip(responses, rewards)),
    )


def random_params(arch: str, vocab_size: int, context_window: int, seed: int, hidden_width: int = 4,
                  scale: float = 1.0) -> PolicyParams:
    """Parameters with every entry drawn N(0, scale^2)"""
    base = init_params(arch, vocab_size, context_window=context_window, hidden_width=hidden_width)
    rng = np.random.default_rng(seed)
    return base.with_values(scale * rng.standard_normal(base.dim))


def tiny_config(**overrides) -> TrainConfig:
    """A fast config; keys are flat ``section.key`` strings"""
    values = {
        "env.family": "copy_seq",
        "env.vocab_size": "2",
        "env.prompt_len": "3",
        "env.seed": "11",
        "policy.arch": "tabular_softmax",
        "policy.context_window": "6",
        "train.steps": "3",
        "train.seed": "5",
        "train.batch_groups": "4",
        "train.group_size": "4",
        "train.max_waves": "4",
        "eval.prompts": "4",
        "eval.rollouts": "2",
        "eval.every": "0",
    }
    values.update({k: str(v) for k, v in overrides.items()})
    return parse_config(values)


@pytest.fixture
def copy_env() -> EnvConfig:
    return EnvConfig(family="copy_seq", vocab_size=2, prompt_len=3, seed=7)


@pytest.fixture
def parity_env() -> EnvConfig:
    return EnvConfig(family="parity_sum", vocab_size=2, prompt_len=4, seed=3)


@pytest.fixture
def prompt() -> Prompt:
    return Prompt(id="p0", tokens=(1, 0, 1), env_tag="copy_seq")
