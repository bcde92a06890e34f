"""Second stage: partial rollouts, empirical values, rejection sampling"""

from app.explore.rollouts import (
    GroupClass,
    RolloutGroup,
    classify_group,
    empirical_value,
    exact_value,
    partial_rollouts,
    rejection_filter,
)
from app.explore.workers import fan_out

__all__ = [
    "GroupClass",
    "RolloutGroup",
    "classify_group",
    "empirical_value",
    "exact_value",
    "partial_rollouts",
    "rejection_filter",
    "fan_out",
]
