"""Synthetic environments with deterministic verifiers"""

from app.envs.tasks import (
    COPY_SEQ,
    PARITY_SUM,
    EnvConfig,
    draw_prompt,
    is_terminal,
    is_truncated,
    sample_prompt,
    verify,
)

__all__ = [
    "COPY_SEQ",
    "PARITY_SUM",
    "EnvConfig",
    "draw_prompt",
    "is_terminal",
    "is_truncated",
    "sample_prompt",
    "verify",
]
