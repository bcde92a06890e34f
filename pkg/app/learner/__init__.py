"""Advantages, the clip-higher loss, updates and batch accumulation"""

from app.learner.advantages import (
    STAGE1,
    STAGE2,
    AdvantageBatch,
    AdvantageEntry,
    ModulationFactor,
    fr3e_advantages,
    group_advantage,
    modulation_factor,
    stage1_advantages,
)
from app.learner.batching import BatchAccumulator, accumulate_batch
from app.learner.loss import EPS_HIGH, EPS_LOW, clip_higher_loss
from app.learner.optim import OptimState, apply_update, init_optim

__all__ = [
    "STAGE1",
    "STAGE2",
    "AdvantageBatch",
    "AdvantageEntry",
    "ModulationFactor",
    "fr3e_advantages",
    "group_advantage",
    "modulation_factor",
    "stage1_advantages",
    "BatchAccumulator",
    "accumulate_batch",
    "EPS_HIGH",
    "EPS_LOW",
    "clip_higher_loss",
    "OptimState",
    "apply_update",
    "init_optim",
]
