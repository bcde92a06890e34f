"""Token-wise entropy of the policy along a response"""

import logging
import math
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from app.core.errors import ContractError
from app.core.types import Prompt, Trajectory
from app.policy.model import TokenDistribution, distribution
from app.policy.params import PolicyParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EntropyProfile:
    """H_1..H_L in nats, aligned with the response"""
    values: Tuple[float, ...]

    def __len__(self) -> int:
        return len(self.values)

    @property
    def mean(self) -> float:
        return float(np.mean(self.values)) if self.values else 0.0


def token_entropy(dist: Union[TokenDistribution, Sequence[float]]) -> float:
    """-Σ p ln p with 0·ln 0 = 0, clamped into [0, ln |V|]"""
    if isinstance(dist, TokenDistribution):
        p, logp = dist.probs, dist.logprobs
    else:
        p = np.asarray(dist, dtype=np.float64)
        with np.errstate(divide="ignore"):
            logp = np.log(p)
    with np.errstate(invalid="ignore"):
        terms = np.where(p > 0.0, p * logp, 0.0)
    h = -float(terms.sum())
    return min(max(h, 0.0), math.log(p.shape[0]))


def entropy_profile(params: PolicyParams, traj: Trajectory, prompt: Prompt) -> EntropyProfile:
    """Recompute H_k at every response position under ``params``"""
    if traj.prompt_id != prompt.id:
        raise ContractError(f"trajectory for {traj.prompt_id} profiled against prompt {prompt.id}")
    values = []
    for k in range(len(traj.response)):
        ctx = prompt.tokens + tuple(traj.response[:k])
        values.append(token_entropy(distribution(params, ctx)))
    return EntropyProfile(values=tuple(values))
