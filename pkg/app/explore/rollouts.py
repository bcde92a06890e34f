"""Second stage: partial rollouts from intermediate states and their values"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np

from app.core.errors import ContractError
from app.core.types import Prompt, PromptGroup, Trajectory
from app.envs.tasks import EnvConfig, is_terminal, verify
from app.first_return.segmentation import IntermediateState
from app.policy.model import distribution, generate
from app.policy.params import PolicyParams

logger = logging.getLogger(__name__)


class GroupClass(str, Enum):
    ALL_RIGHT = "all_right"
    ALL_WRONG = "all_wrong"
    MIXED = "mixed"


@dataclass(frozen=True)
class RolloutGroup:
    """M rollouts launched from state S_j; each rollout's response starts with S_j's prefix"""
    prompt_id: str
    state_index: int
    prefix_len: int
    rollouts: Tuple[Trajectory, ...]
    rewards: Tuple[int, ...]
    value: float

    @property
    def group_class(self) -> "GroupClass":
        return classify_group(self.rewards)

    @property
    def continuation_tokens(self) -> int:
        return sum(t.length - self.prefix_len for t in self.rollouts)


def empirical_value(rewards: Sequence[int]) -> float:
    """V(S_j): mean reward over the rollouts"""
    if len(rewards) == 0:
        raise ContractError("empirical value of an empty reward list")
    return sum(int(r) for r in rewards) / len(rewards)


def classify_group(rewards: Sequence[int]) -> GroupClass:
    if len(rewards) == 0:
        raise ContractError("cannot classify an empty reward list")
    if min(rewards) == 1:
        return GroupClass.ALL_RIGHT
    if max(rewards) == 0:
        return GroupClass.ALL_WRONG
    return GroupClass.MIXED


def partial_rollouts(params: PolicyParams, state: IntermediateState, m: int, env_config: EnvConfig,
                     rng: np.random.Generator) -> RolloutGroup:
    """Sample M continuations of S_j and score the full responses"""
    if m < 1:
        raise ContractError(f"need at least one rollout per state, got {m}")
    prefix = state.prefix
    rollouts = tuple(
        generate(params, state.prompt, env_config, rng, prefix=prefix)
        for _ in range(m)
    )
    rewards = tuple(t.reward for t in rollouts)
    return RolloutGroup(
        prompt_id=state.prompt.id,
        state_index=state.j,
        prefix_len=len(prefix),
        rollouts=rollouts,
        rewards=rewards,
        value=empirical_value(rewards),
    )


def rejection_filter(groups: Sequence[PromptGroup]) -> Tuple[List[PromptGroup], int]:
    """Drop prompts whose rollouts all agree (all 0s or all 1s); order preserved"""
    kept = []
    rejected = 0
    for group in groups:
        if group.size < 2:
            raise ContractError(f"prompt {group.prompt.id} has {group.size} rollouts; need >= 2")
        if classify_group(group.rewards) == GroupClass.MIXED:
            kept.append(group)
        else:
            rejected += 1
    return kept, rejected


def exact_value(params: PolicyParams, prompt: Prompt, prefix: Sequence[int], env_config: EnvConfig) -> float:
    """Probability-weighted reward over every continuation of ``prefix`` (brute force)"""

    def expand(response: List[int]) -> float:
        if is_terminal(env_config, response):
            return float(verify(env_config, prompt, response))
        probs = distribution(params, prompt.tokens + tuple(response)).probs
        total = 0.0
        for token in range(probs.shape[0]):
            if probs[token] > 0.0:
                total += probs[token] * expand(response + [token])
        return total

    return expand([int(t) for t in prefix])
