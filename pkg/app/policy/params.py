"""Policy parameter vectors, initialisation and checkpoint files"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from app.core.errors import ConfigError, ContractError
from app.core.streams import Purpose, make_stream

logger = logging.getLogger(__name__)

TABULAR = "tabular_softmax"
MLP = "mlp"
ARCHS = (TABULAR, MLP)

CHECKPOINT_MAGIC = "# forkpulse-checkpoint"


def full_table_rows(vocab_size: int, context_window: int) -> int:
    """Number of distinct padded context windows: (V+1)^c"""
    return (vocab_size + 1) ** context_window


def parameter_count(arch: str, vocab_size: int, context_window: int,
                    hidden_width: int = 0, table_rows: int = 0) -> int:
    """Length of the flat parameter vector for an architecture"""
    if arch == TABULAR:
        # keyed rows plus one shared default row
        return (table_rows + 1) * vocab_size
    if arch == MLP:
        n_in = context_window * (vocab_size + 1)
        return hidden_width * n_in + hidden_width + vocab_size * hidden_width + vocab_size
    raise ConfigError(f"unknown policy arch: {arch}")


@dataclass(frozen=True, eq=False)
class PolicyParams:
    """Flat parameter vector θ plus the architecture metadata needed to read it.

    Tabular layout: ``(table_rows + 1) x V`` logits, row-major; the last row is
    the shared default row for windows outside the table.

    MLP layout: ``W1 (h x c(V+1))``, ``b1 (h)``, ``W2 (V x h)``, ``b2 (V)``,
    each row-major, concatenated in that order.
    """
    values: np.ndarray
    arch: str
    vocab_size: int
    context_window: int = 8
    hidden_width: int = 0
    table_rows: int = 0
    snapshot_id: str = "init"

    def __post_init__(self):
        if self.arch not in ARCHS:
            raise ConfigError(f"unknown policy arch: {self.arch}")
        if self.context_window < 1:
            raise ConfigError("policy context window must be >= 1")
        if self.vocab_size < 2:
            raise ConfigError(f"vocab size must be >= 2, got {self.vocab_size}")
        if self.arch == MLP and self.hidden_width < 1:
            raise ConfigError("mlp policy needs hidden_width >= 1")
        if self.arch == TABULAR and self.table_rows < 1:
            raise ConfigError("tabular policy needs table_rows >= 1")

        values = np.array(self.values, dtype=np.float64).ravel()
        expected = parameter_count(self.arch, self.vocab_size, self.context_window,
                                   self.hidden_width, self.table_rows)
        if values.shape[0] != expected:
            raise ContractError(f"{self.arch} expects {expected} parameters, got {values.shape[0]}")
        if not np.all(np.isfinite(values)):
            raise ContractError("policy parameters must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    def with_values(self, values: np.ndarray, snapshot_id: Optional[str] = None) -> "PolicyParams":
        """Same architecture, new θ"""
        return PolicyParams(
            values=values,
            arch=self.arch,
            vocab_size=self.vocab_size,
            context_window=self.context_window,
            hidden_width=self.hidden_width,
            table_rows=self.table_rows,
            snapshot_id=snapshot_id or self.snapshot_id,
        )

    def header(self) -> dict:
        return {
            "arch": self.arch,
            "vocab_size": self.vocab_size,
            "context_window": self.context_window,
            "hidden_width": self.hidden_width,
            "table_rows": self.table_rows,
            "snapshot_id": self.snapshot_id,
            "count": self.dim,
        }


def init_params(arch: str, vocab_size: int, context_window: int = 8, hidden_width: int = 16,
                init_scale: float = 0.0, seed: int = 0, max_table_rows: int = 65536) -> PolicyParams:
    """Fresh parameters.

    With ``init_scale = 0`` both architectures start as the uniform policy;
    MLP input weights always get He-scaled noise so the hidden layer is live.
    """
    if context_window < 1:
        raise ConfigError("policy context window must be >= 1")
    rng = make_stream(seed, Purpose.INIT)

    if arch == TABULAR:
        rows = min(full_table_rows(vocab_size, context_window), max_table_rows)
        n = parameter_count(TABULAR, vocab_size, context_window, table_rows=rows)
        values = init_scale * rng.standard_normal(n) if init_scale > 0 else np.zeros(n)
        return PolicyParams(values=values, arch=TABULAR, vocab_size=vocab_size,
                            context_window=context_window, table_rows=rows)

    if arch == MLP:
        n_in = context_window * (vocab_size + 1)
        w1 = rng.standard_normal((hidden_width, n_in)) * np.sqrt(2.0 / n_in)
        b1 = np.zeros(hidden_width)
        w2 = init_scale * rng.standard_normal((vocab_size, hidden_width)) if init_scale > 0 \
            else np.zeros((vocab_size, hidden_width))
        b2 = np.zeros(vocab_size)
        values = np.concatenate([w1.ravel(), b1, w2.ravel(), b2])
        return PolicyParams(values=values, arch=MLP, vocab_size=vocab_size,
                            context_window=context_window, hidden_width=hidden_width)

    raise ConfigError(f"unknown policy arch: {arch}")


def save_checkpoint(path: Path, params: PolicyParams, step: int) -> Path:
    """Write a text checkpoint: one JSON header line, then one value per line"""
    header = dict(params.header(), step=int(step))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"{CHECKPOINT_MAGIC} {json.dumps(header, sort_keys=True)}\n")
        for x in params.values:
            handle.write(f"{float(x)!r}\n")
    logger.debug(f"Checkpoint written: {path}")
    return path


def load_checkpoint(path: Path) -> Tuple[PolicyParams, int]:
    """Read a checkpoint written by save_checkpoint; returns (params, step)"""
    with open(path, "r", encoding="utf-8") as handle:
        first = handle.readline()
        if not first.startswith(CHECKPOINT_MAGIC):
            raise ContractError(f"not a checkpoint file: {path}")
        header = json.loads(first[len(CHECKPOINT_MAGIC):])
        values = np.array([float(line) for line in handle if line.strip()], dtype=np.float64)

    if values.shape[0] != header["count"]:
        raise ContractError(f"checkpoint {path} truncated: {values.shape[0]} of {header['count']} values")

    params = PolicyParams(
        values=values,
        arch=header["arch"],
        vocab_size=header["vocab_size"],
        context_window=header["context_window"],
        hidden_width=header["hidden_width"],
        table_rows=header["table_rows"],
        snapshot_id=header["snapshot_id"],
    )
    return params, int(header["step"])
