"""Clip-higher surrogate loss and its gradient"""

import logging
import math
from typing import Tuple

import numpy as np

from app.core.errors import ContractError
from app.learner.advantages import AdvantageBatch
from app.policy.model import accumulate_grad_log_prob, log_prob
from app.policy.params import PolicyParams

logger = logging.getLogger(__name__)

EPS_LOW = 0.22
EPS_HIGH = 0.28


def clip_higher_loss(batch: AdvantageBatch, params: PolicyParams, eps_low: float = EPS_LOW,
                     eps_high: float = EPS_HIGH) -> Tuple[float, np.ndarray]:
    """Token-mean clipped surrogate with asymmetric bounds [1-eps_low, 1+eps_high].

    Returns the loss and its gradient (descent direction). A token feeds the
    gradient ρ·Â·∇ln π only when the unclipped term attains the min; on a tie
    the unclipped branch wins. Tokens are reduced in key order.
    """
    if len(batch) == 0:
        raise ContractError("clip-higher loss of an empty batch")

    entries = sorted(batch.entries, key=lambda e: e.key)
    grad = np.zeros(params.dim)
    total = 0.0
    clipped = 0
    lo, hi = 1.0 - eps_low, 1.0 + eps_high

    for e in entries:
        current = log_prob(params, e.context, e.token)
        try:
            ratio = math.exp(current - e.behavior_logprob)
        except OverflowError:
            ratio = math.inf
        if not math.isfinite(ratio):
            raise ContractError(f"non-finite probability ratio for {e.key} "
                                f"(behaviour log-prob {e.behavior_logprob})")

        unclipped = ratio * e.advantage
        bounded = min(max(ratio, lo), hi) * e.advantage
        if unclipped <= bounded:
            total += unclipped
            accumulate_grad_log_prob(params, e.context, e.token, unclipped, grad)
        else:
            total += bounded
            clipped += 1

    n = len(entries)
    logger.debug(f"clip-higher loss over {n} tokens, {clipped} clipped")
    return -total / n, grad * (-1.0 / n)
