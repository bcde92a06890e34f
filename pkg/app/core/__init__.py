"""Shared domain types and the trajectory log codec"""

from app.core.errors import ConfigError, ContractError, ForkPulseError, TrainingAborted
from app.core.streams import Purpose, make_stream
from app.core.types import Prompt, PromptGroup, Trajectory, TrajectoryRecord, Vocab
from app.core.records import (
    decode_record,
    encode_record,
    read_records,
    validate_trajectory,
    write_records,
)

__all__ = [
    "ConfigError",
    "ContractError",
    "ForkPulseError",
    "TrainingAborted",
    "Purpose",
    "make_stream",
    "Prompt",
    "PromptGroup",
    "Trajectory",
    "TrajectoryRecord",
    "Vocab",
    "decode_record",
    "encode_record",
    "read_records",
    "validate_trajectory",
    "write_records",
]
