"""Shared domain types"""

from dataclasses import dataclass
from typing import Optional, Tuple

from app.core.errors import ContractError


@dataclass(frozen=True)
class Vocab:
    """Dense token id space [0, size)"""
    size: int
    names: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        if self.size < 2:
            raise ContractError(f"vocab size must be >= 2, got {self.size}")
        if self.names is not None and len(self.names) != self.size:
            raise ContractError(f"expected {self.size} token names, got {len(self.names)}")

    def contains(self, token: int) -> bool:
        return 0 <= token < self.size

    def name(self, token: int) -> str:
        if self.names is None:
            return str(token)
        return self.names[token]


@dataclass(frozen=True)
class Prompt:
    """Context tokens handed to the policy before it answers"""
    id: str
    tokens: Tuple[int, ...]
    env_tag: str

    def __post_init__(self):
        if not self.tokens:
            raise ContractError(f"prompt {self.id} has no tokens")

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class Trajectory:
    """One sampled response with per-token log-probs, entropies (nats) and its reward.

    Not validated on construction; use ``app.core.records.validate_trajectory``.
    """
    prompt_id: str
    response: Tuple[int, ...]
    logprobs: Tuple[float, ...]
    entropies: Tuple[float, ...]
    reward: int
    truncated: bool = False

    @property
    def length(self) -> int:
        return len(self.response)


@dataclass(frozen=True)
class PromptGroup:
    """G trajectories sampled independently for the same prompt"""
    prompt: Prompt
    trajectories: Tuple[Trajectory, ...]

    @property
    def rewards(self) -> Tuple[int, ...]:
        return tuple(t.reward for t in self.trajectories)

    @property
    def size(self) -> int:
        return len(self.trajectories)


@dataclass(frozen=True)
class TrajectoryRecord:
    """A trajectory as written to the trajectory log"""
    trajectory: Trajectory
    step: int
    snapshot_id: str
    positions: Optional[Tuple[int, ...]] = None
    stage: str = "stage1"
    # leading response tokens forced from a stage-2 state, not sampled by this rollout
    prefix_len: int = 0
