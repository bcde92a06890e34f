"""Training orchestration, evaluation, configuration and reports"""

from app.harness.evaluation import EvalResult, eval_prompts, evaluate
from app.harness.metrics import METRIC_COLUMNS, StepMetrics, append_metrics, metrics_frame, read_metrics
from app.harness.reports import (
    CompareReport,
    accuracy_matrix,
    compare,
    compare_frames,
    entropy_token_report,
    load_checkpoints,
)
from app.harness.settings import TrainConfig, dump_config, load_config, parse_config, write_config
from app.harness.trainer import FR3E, GRPO_PP, TrainResult, Trainer, build_policy, train

__all__ = [
    "EvalResult",
    "eval_prompts",
    "evaluate",
    "METRIC_COLUMNS",
    "StepMetrics",
    "append_metrics",
    "metrics_frame",
    "read_metrics",
    "CompareReport",
    "accuracy_matrix",
    "compare",
    "compare_frames",
    "entropy_token_report",
    "load_checkpoints",
    "TrainConfig",
    "dump_config",
    "load_config",
    "parse_config",
    "write_config",
    "FR3E",
    "GRPO_PP",
    "TrainResult",
    "Trainer",
    "build_policy",
    "train",
]
