"""Per-step training metrics and the metrics CSV"""

import logging
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Dict, Iterable, List

import pandas as pd

logger = logging.getLogger(__name__)


@dataclass
class StepMetrics:
    """One row of metrics.csv. Field order is the column order (docs/FORMATS.md)."""
    step: int
    algorithm: str

    # Generation
    waves: int = 0
    mean_token_entropy: float = 0.0
    mean_response_length: float = 0.0

    # Stage-1 groups, over every prompt generated this step
    stage1_groups: int = 0
    stage1_all_right: int = 0
    stage1_all_wrong: int = 0
    stage1_mixed: int = 0
    rejected_prompt_count: int = 0

    # Batch
    batch_groups: int = 0
    buffered_groups: int = 0

    # Stage-2 state groups
    stage2_groups: int = 0
    stage2_all_right: int = 0
    stage2_all_wrong: int = 0
    stage2_mixed: int = 0
    mean_alpha: float = math.nan

    # Update
    token_count: int = 0
    advantage_mean: float = 0.0
    advantage_std: float = 0.0
    loss: float = math.nan

    # Rollout budget
    generated_token_count: int = 0
    stage2_token_count: int = 0
    cumulative_generated_tokens: int = 0

    eval_success_rate: float = math.nan

    def to_dict(self) -> Dict:
        return asdict(self)

    def conservation_errors(self) -> List[str]:
        """Count identities every row must satisfy; empty when consistent"""
        errors = []
        if self.stage1_all_right + self.stage1_all_wrong + self.stage1_mixed != self.stage1_groups:
            errors.append("stage-1 class counts do not sum to the groups generated")
        if self.rejected_prompt_count != self.stage1_all_right + self.stage1_all_wrong:
            errors.append("rejected count differs from the degenerate stage-1 groups")
        if self.stage2_all_right + self.stage2_all_wrong + self.stage2_mixed != self.stage2_groups:
            errors.append("stage-2 class counts do not sum to the state groups")
        counts = (self.waves, self.stage1_groups, self.batch_groups, self.buffered_groups, self.stage2_groups,
                  self.token_count, self.generated_token_count, self.stage2_token_count)
        if any(c < 0 for c in counts):
            errors.append("negative count")
        return errors


METRIC_COLUMNS = tuple(f.name for f in fields(StepMetrics))


def metrics_frame(rows: Iterable[StepMetrics]) -> pd.DataFrame:
    return pd.DataFrame([r.to_dict() for r in rows], columns=list(METRIC_COLUMNS))


def append_metrics(path: Path, row: StepMetrics) -> None:
    """Append one row, writing the header when the file is new"""
    path = Path(path)
    frame = metrics_frame([row])
    frame.to_csv(path, mode="a", header=not path.exists(), index=False)


def read_metrics(path: Path) -> pd.DataFrame:
    return pd.read_csv(path)
