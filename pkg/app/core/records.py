"""Trajectory validation and the line-record log codec"""

import json
import logging
import math
from pathlib import Path
from typing import Iterable, Iterator, Optional

from app.core.errors import ContractError
from app.core.types import Trajectory, TrajectoryRecord

logger = logging.getLogger(__name__)

# Key order is part of the log format (docs/FORMATS.md)
RECORD_KEYS = (
    "prompt_id",
    "response",
    "logprobs",
    "entropies",
    "reward",
    "truncated",
    "step",
    "snapshot_id",
    "stage",
    "positions",
    "prefix_len",
)


def validate_trajectory(traj: Trajectory) -> Optional[str]:
    """Return None when every Trajectory invariant holds, else the first violation"""
    if len(traj.response) == 0:
        return "response empty"
    if len(traj.logprobs) != len(traj.response):
        return "logprobs length mismatch"
    if len(traj.entropies) != len(traj.response):
        return "entropies length mismatch"
    for lp in traj.logprobs:
        if not math.isfinite(lp):
            return "logprob not finite"
        if lp > 0:
            return "logprob positive"
    for h in traj.entropies:
        if not math.isfinite(h):
            return "entropy not finite"
        if h < 0:
            return "entropy negative"
    if isinstance(traj.reward, bool) or traj.reward not in (0, 1):
        return "reward not binary"
    return None


def encode_record(record: TrajectoryRecord) -> str:
    """Render a record as one JSON line (no trailing newline).

    Floats use Python's shortest round-trip repr, so decoding is bit-exact.
    """
    violation = validate_trajectory(record.trajectory)
    if violation is not None:
        raise ContractError(f"cannot encode record for {record.trajectory.prompt_id}: {violation}")

    if not 0 <= record.prefix_len <= len(record.trajectory.response):
        raise ContractError(f"cannot encode record for {record.trajectory.prompt_id}: "
                            f"prefix_len {record.prefix_len} outside the response")

    traj = record.trajectory
    payload = {
        "prompt_id": traj.prompt_id,
        "response": [int(t) for t in traj.response],
        "logprobs": [float(x) for x in traj.logprobs],
        "entropies": [float(x) for x in traj.entropies],
        "reward": int(traj.reward),
        "truncated": bool(traj.truncated),
        "step": int(record.step),
        "snapshot_id": record.snapshot_id,
        "stage": record.stage,
        "positions": None if record.positions is None else [int(k) for k in record.positions],
        "prefix_len": int(record.prefix_len),
    }
    return json.dumps(payload, separators=(",", ":"), allow_nan=False)


def decode_record(line: str) -> TrajectoryRecord:
    """Parse one line produced by encode_record"""
    try:
        payload = json.loads(line)
    except json.JSONDecodeError as e:
        raise ContractError(f"malformed trajectory record: {e}") from e

    missing = [key for key in RECORD_KEYS if key not in payload]
    if missing:
        raise ContractError(f"trajectory record missing keys: {', '.join(missing)}")

    traj = Trajectory(
        prompt_id=payload["prompt_id"],
        response=tuple(payload["response"]),
        logprobs=tuple(float(x) for x in payload["logprobs"]),
        entropies=tuple(float(x) for x in payload["entropies"]),
        reward=payload["reward"],
        truncated=payload["truncated"],
    )
    positions = payload["positions"]
    return TrajectoryRecord(
        trajectory=traj,
        step=payload["step"],
        snapshot_id=payload["snapshot_id"],
        positions=None if positions is None else tuple(positions),
        stage=payload["stage"],
        prefix_len=payload["prefix_len"],
    )


def write_records(path: Path, records: Iterable[TrajectoryRecord]) -> int:
    """Append records to a log file; returns the number written"""
    count = 0
    with open(path, "a", encoding="utf-8") as handle:
        for record in records:
            handle.write(encode_record(record))
            handle.write("\n")
            count += 1
    return count


def read_records(path: Path) -> Iterator[TrajectoryRecord]:
    """Iterate records from a log file, skipping blank lines"""
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield decode_record(line)
            except ContractError as e:
                logger.error(f"Bad record at {path}:{lineno}: {e}")
                raise
