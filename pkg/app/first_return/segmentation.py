"""Entropy-sensitive positions, blocks and intermediate states"""

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

from app.core.errors import ContractError
from app.core.types import Prompt, PromptGroup, Trajectory
from app.first_return.entropy import EntropyProfile

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Segmentation:
    """Response split at positions k_1 < ... < k_K (1-based).

    ``blocks`` are half-open 0-based index ranges over the response; block n
    holds tokens t_{k_{n-1}+1} .. t_{k_n} with k_0 = 0 and k_{K+1} = L.
    """
    response: Tuple[int, ...]
    positions: Tuple[int, ...]
    blocks: Tuple[Tuple[int, int], ...]

    @property
    def k_effective(self) -> int:
        return len(self.positions)

    @property
    def length(self) -> int:
        return len(self.response)

    def block_tokens(self, n: int) -> Tuple[int, ...]:
        """Tokens of block B_n, n in 1..K+1"""
        start, end = self.blocks[n - 1]
        return self.response[start:end]


@dataclass(frozen=True)
class IntermediateState:
    """S_j: the prompt followed by blocks B_1..B_j"""
    j: int
    tokens: Tuple[int, ...]
    prompt: Prompt

    @property
    def prefix(self) -> Tuple[int, ...]:
        """Response tokens fixed by the state"""
        return self.tokens[len(self.prompt.tokens):]

    @property
    def prefix_len(self) -> int:
        return len(self.tokens) - len(self.prompt.tokens)


def topk_positions(profile: EntropyProfile, k: int, exclude_final: bool = False) -> Tuple[int, ...]:
    """1-based positions of the k largest entropies, ascending.

    Ties go to the smaller index. When k >= L, or when ``exclude_final`` is
    set, position L is not a candidate so the last block stays nonempty; the
    effective count then shrinks to what the remaining positions allow.
    """
    length = len(profile.values)
    if length == 0:
        raise ContractError("cannot select positions from an empty entropy profile")
    if k < 1:
        raise ContractError(f"top-k needs k >= 1, got {k}")

    if exclude_final or k >= length:
        candidates = range(1, length)
    else:
        candidates = range(1, length + 1)
    k_eff = min(k, len(candidates))

    ranked = sorted(candidates, key=lambda pos: (-profile.values[pos - 1], pos))
    return tuple(sorted(ranked[:k_eff]))


def segment(traj: Trajectory, positions: Sequence[int]) -> Segmentation:
    """Cut the response into K+1 blocks at the given positions"""
    length = len(traj.response)
    positions = tuple(int(k) for k in positions)
    for k in positions:
        if not 1 <= k <= length - 1:
            raise ContractError(f"segmentation position {k} outside [1, {length - 1}]")
    for a, b in zip(positions, positions[1:]):
        if b <= a:
            raise ContractError(f"segmentation positions must be strictly increasing: {positions}")

    bounds = (0,) + positions + (length,)
    blocks = tuple((bounds[n], bounds[n + 1]) for n in range(len(bounds) - 1))
    return Segmentation(response=tuple(traj.response), positions=positions, blocks=blocks)


def build_states(prompt: Prompt, segmentation: Segmentation) -> List[IntermediateState]:
    """S_0..S_K; S_0 is the bare prompt"""
    bounds = (0,) + segmentation.positions
    return [
        IntermediateState(j=j, tokens=prompt.tokens + segmentation.response[:k], prompt=prompt)
        for j, k in enumerate(bounds)
    ]


def base_trajectory_index(group: PromptGroup) -> int:
    """Index of the shortest correct trajectory (lowest index on ties)"""
    best = None
    for i, traj in enumerate(group.trajectories):
        if traj.reward != 1:
            continue
        if best is None or traj.length < group.trajectories[best].length:
            best = i
    if best is None:
        raise ContractError(f"prompt {group.prompt.id} has no correct trajectory to segment")
    return best


def select_base_trajectory(group: PromptGroup) -> Trajectory:
    """The trajectory FR3E segments: shortest correct, first on ties"""
    return group.trajectories[base_trajectory_index(group)]
