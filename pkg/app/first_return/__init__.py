"""First stage: find uncertain positions on a correct trajectory and cut it into states"""

from app.first_return.entropy import EntropyProfile, entropy_profile, token_entropy
from app.first_return.segmentation import (
    IntermediateState,
    Segmentation,
    base_trajectory_index,
    build_states,
    segment,
    select_base_trajectory,
    topk_positions,
)

__all__ = [
    "EntropyProfile",
    "entropy_profile",
    "token_entropy",
    "IntermediateState",
    "Segmentation",
    "base_trajectory_index",
    "build_states",
    "segment",
    "select_base_trajectory",
    "topk_positions",
]
