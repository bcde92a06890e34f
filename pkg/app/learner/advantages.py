"""Advantages: group-relative (stage 1, GRPO++) and value-modulated (stage 2)"""

import logging
import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from app.core.errors import ContractError
from app.core.types import PromptGroup
from app.explore.rollouts import RolloutGroup
from app.first_return.segmentation import IntermediateState

logger = logging.getLogger(__name__)

STAGE1 = "stage1"
STAGE2 = "stage2"
MIXED = "mixed"


@dataclass(frozen=True)
class AdvantageEntry:
    """One token of one rollout with its advantage and behaviour log-prob.

    ``key`` = (prompt id, stage, state index, rollout index, position) fixes
    the reduction order of the loss.
    """
    key: Tuple[str, int, int, int, int]
    context: Tuple[int, ...]
    token: int
    advantage: float
    behavior_logprob: float


@dataclass(frozen=True)
class ModulationFactor:
    j: int
    alpha: float
    delta_v: float


@dataclass(frozen=True)
class AdvantageBatch:
    entries: Tuple[AdvantageEntry, ...]
    source: str
    factors: Tuple[ModulationFactor, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def advantages(self) -> np.ndarray:
        return np.array([e.advantage for e in self.entries], dtype=np.float64)

    def stats(self) -> Tuple[float, float]:
        """(mean, population std) of the token advantages; zeros when empty"""
        if not self.entries:
            return 0.0, 0.0
        adv = self.advantages
        return float(adv.mean()), float(adv.std())

    @staticmethod
    def merge(*batches: "AdvantageBatch") -> "AdvantageBatch":
        batches = [b for b in batches if len(b)]
        if not batches:
            return AdvantageBatch(entries=(), source=STAGE1)
        sources = {b.source for b in batches}
        return AdvantageBatch(
            entries=tuple(e for b in batches for e in b.entries),
            source=sources.pop() if len(sources) == 1 else MIXED,
            factors=tuple(f for b in batches for f in b.factors),
        )


def group_advantage(rewards: Sequence[int], normalize_std: bool = False) -> np.ndarray:
    """A_i = r_i - mean(r), optionally divided by the sample std"""
    if len(rewards) == 0:
        raise ContractError("group advantage of an empty group")
    r = np.asarray(rewards, dtype=np.float64)
    centred = r - r.mean()
    if not normalize_std:
        return centred
    if r.shape[0] < 2:
        raise ContractError("std normalisation needs at least two rollouts")
    std = float(r.std(ddof=1))
    if std == 0.0:
        raise ContractError("cannot std-normalise a group with identical rewards")
    return centred / std


def stage1_advantages(groups: Sequence[PromptGroup], normalize_std: bool = False) -> AdvantageBatch:
    """Every token of every stage-1 rollout, credited with its group advantage"""
    entries = []
    for group in groups:
        adv = group_advantage(group.rewards, normalize_std)
        prompt = group.prompt
        for i, traj in enumerate(group.trajectories):
            a = float(adv[i])
            for pos, token in enumerate(traj.response):
                entries.append(AdvantageEntry(
                    key=(prompt.id, 1, 0, i, pos),
                    context=prompt.tokens + traj.response[:pos],
                    token=token,
                    advantage=a,
                    behavior_logprob=traj.logprobs[pos],
                ))
    return AdvantageBatch(entries=tuple(entries), source=STAGE1)


def modulation_factor(v_j: float, v_prev: float, j: int = 0) -> ModulationFactor:
    """α_j = exp(-(V(S_j) - V(S_{j-1}))): damp progress, amplify stagnation"""
    for v in (v_j, v_prev):
        if not 0.0 <= v <= 1.0:
            raise ContractError(f"state values must lie in [0, 1], got {v}")
    delta = v_j - v_prev
    return ModulationFactor(j=j, alpha=math.exp(-delta), delta_v=delta)


def fr3e_advantages(states: Sequence[IntermediateState], groups: Sequence[RolloutGroup], v0: float,
                    modulate: bool = True) -> AdvantageBatch:
    """α_j·(r_{j,m} - V(S_j)) on the continuation tokens of each stage-2 rollout.

    ``states`` and ``groups`` are aligned and hold consecutive state indices;
    the first state is compared against ``v0`` = V(S_0). Prefix tokens get no
    entry. With ``modulate`` off every α is 1.
    """
    if len(states) != len(groups):
        raise ContractError(f"{len(states)} states but {len(groups)} rollout groups")
    for i, (state, group) in enumerate(zip(states, groups)):
        if state.j != group.state_index or state.prompt.id != group.prompt_id:
            raise ContractError(f"rollout group {group.prompt_id}/{group.state_index} "
                                f"does not belong to state {state.prompt.id}/{state.j}")
        if i and state.j != states[i - 1].j + 1:
            raise ContractError("states must have consecutive indices")

    entries = []
    factors = []
    v_prev = v0
    for state, group in zip(states, groups):
        factor = modulation_factor(group.value, v_prev, j=state.j)
        alpha = factor.alpha if modulate else 1.0
        factors.append(factor)
        for m, traj in enumerate(group.rollouts):
            a = alpha * (traj.reward - group.value)
            for pos in range(group.prefix_len, traj.length):
                entries.append(AdvantageEntry(
                    key=(state.prompt.id, 2, state.j, m, pos),
                    context=state.prompt.tokens + traj.response[:pos],
                    token=traj.response[pos],
                    advantage=a,
                    behavior_logprob=traj.logprobs[pos],
                ))
        v_prev = group.value
    return AdvantageBatch(entries=tuple(entries), source=STAGE2, factors=tuple(factors))
