"""Reports built from runs: side-by-side comparison, token entropy ranking, accuracy heatmap data"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional

import pandas as pd

from app.core.errors import ConfigError, ContractError
from app.core.types import TrajectoryRecord
from app.envs.tasks import EnvConfig
from app.harness.evaluation import evaluate
from app.harness.metrics import metrics_frame
from app.harness.settings import TrainConfig
from app.harness.trainer import train
from app.policy.params import PolicyParams, load_checkpoint

import config

logger = logging.getLogger(__name__)


# ============== compare ==============

@dataclass
class CompareReport:
    by_step: pd.DataFrame
    by_tokens: pd.DataFrame
    verdict: str


def _last_valid(series: pd.Series) -> float:
    valid = series.dropna()
    return float(valid.iloc[-1]) if len(valid) else math.nan


def _trend(series: pd.Series) -> float:
    return float(series.iloc[-1] - series.iloc[0]) if len(series) else 0.0


def _verdict(a: pd.DataFrame, b: pd.DataFrame, name_a: str, name_b: str) -> str:
    lines = []

    def versus(label: str, x: float, y: float, higher_is_better: bool = True) -> None:
        if math.isnan(x) or math.isnan(y):
            lines.append(f"{label}: {name_a}={x} {name_b}={y} (not comparable)")
            return
        if x == y:
            lead = "tie"
        elif (x > y) == higher_is_better:
            lead = f"{name_a} ahead"
        else:
            lead = f"{name_b} ahead"
        lines.append(f"{label}: {name_a}={x:.4f} {name_b}={y:.4f} ({lead})")

    versus("final success rate", _last_valid(a["eval_success_rate"]), _last_valid(b["eval_success_rate"]))
    versus("final mean token entropy", _last_valid(a["mean_token_entropy"]), _last_valid(b["mean_token_entropy"]))
    versus("all-right trend", _trend(a["stage1_all_right"]), _trend(b["stage1_all_right"]))
    versus("all-wrong trend", _trend(a["stage1_all_wrong"]), _trend(b["stage1_all_wrong"]), higher_is_better=False)
    return "\n".join(lines) + "\n"


def compare_frames(a: pd.DataFrame, b: pd.DataFrame, name_a: str = "a", name_b: str = "b") -> CompareReport:
    """Align two metrics logs by step and by cumulative generated tokens"""
    left = a.add_suffix("_a").rename(columns={"step_a": "step"})
    right = b.add_suffix("_b").rename(columns={"step_b": "step"})
    by_step = left.merge(right, on="step", how="outer").sort_values("step", kind="stable").reset_index(drop=True)

    if a.empty or b.empty:
        by_tokens = pd.concat([a.add_suffix("_a"), b.add_suffix("_b")], axis=1).iloc[0:0]
        return CompareReport(by_step=by_step, by_tokens=by_tokens, verdict=_verdict(a, b, name_a, name_b))

    # each row of run a paired with run b's latest row at or below the same token budget
    by_tokens = pd.merge_asof(
        a.add_suffix("_a").sort_values("cumulative_generated_tokens_a", kind="stable"),
        b.add_suffix("_b").sort_values("cumulative_generated_tokens_b", kind="stable"),
        left_on="cumulative_generated_tokens_a",
        right_on="cumulative_generated_tokens_b",
        direction="backward",
    )
    return CompareReport(by_step=by_step, by_tokens=by_tokens, verdict=_verdict(a, b, name_a, name_b))


def compare(config_a: TrainConfig, config_b: TrainConfig, out_dir: Optional[Path] = None,
            workers: Optional[int] = None) -> CompareReport:
    """Train both configs and report them side by side"""
    if config_a.env != config_b.env:
        raise ConfigError("compare needs identical env sections")
    if config_a.policy != config_b.policy:
        raise ConfigError("compare needs identical policy sections")

    out_dir = Path(out_dir) if out_dir is not None else None
    runs = []
    for tag, cfg in (("a", config_a), ("b", config_b)):
        run_dir = out_dir / f"run_{tag}" if out_dir is not None else None
        logger.info(f"Compare: running {tag} ({cfg.train.algorithm})")
        runs.append(metrics_frame(train(cfg, out_dir=run_dir, workers=workers).metrics))

    name_a = config_a.train.algorithm
    name_b = config_b.train.algorithm
    if name_a == name_b:
        name_a, name_b = "a", "b"
    report = compare_frames(runs[0], runs[1], name_a, name_b)

    if out_dir is not None:
        report.by_step.to_csv(out_dir / config.COMPARE_FILE, index=False)
        report.by_tokens.to_csv(out_dir / config.COMPARE_TOKENS_FILE, index=False)
        (out_dir / config.COMPARE_VERDICT_FILE).write_text(report.verdict, encoding="utf-8")
        logger.info(f"Compare report written to {out_dir}")
    return report


# ============== token entropy ==============

TOKEN_REPORT_COLUMNS = ["rank", "token", "count", "mean_entropy"]


def entropy_token_report(records: Iterable[TrajectoryRecord], top_n: int = 10,
                         min_count: Optional[int] = None) -> pd.DataFrame:
    """Tokens ranked by the mean entropy of the distributions they were emitted from"""
    min_count = config.TOKEN_FLOOR if min_count is None else min_count
    tokens: List[int] = []
    entropies: List[float] = []
    for record in records:
        # forced stage-2 prefixes were emitted once, by the base trajectory
        tokens.extend(record.trajectory.response[record.prefix_len:])
        entropies.extend(record.trajectory.entropies[record.prefix_len:])
    if not tokens:
        raise ContractError("token report needs a nonempty trajectory log")

    frame = pd.DataFrame({"token": tokens, "entropy": entropies})
    stats = frame.groupby("token")["entropy"].agg(count="count", mean_entropy="mean").reset_index()
    stats = stats[stats["count"] >= min_count]
    stats = stats.sort_values(["mean_entropy", "token"], ascending=[False, True], kind="stable").head(top_n)
    stats = stats.reset_index(drop=True)
    stats.insert(0, "rank", range(1, len(stats) + 1))
    return stats[TOKEN_REPORT_COLUMNS]


# ============== accuracy matrix ==============

def load_checkpoints(directory: Path) -> Dict[int, PolicyParams]:
    """Every checkpoint file in a directory, keyed by step"""
    directory = Path(directory)
    found = {}
    for path in sorted(directory.glob("*.ckpt")):
        params, step = load_checkpoint(path)
        found[step] = params
    if not found:
        raise ContractError(f"no checkpoints in {directory}")
    return dict(sorted(found.items()))


def accuracy_matrix(checkpoints: Mapping[int, PolicyParams], env_config: EnvConfig, n_prompts: int,
                    rollouts_per_prompt: int, greedy: bool = False, workers: int = 1) -> pd.DataFrame:
    """Rows are evaluation prompt ids, columns checkpoint steps, cells per-prompt success rates"""
    if not checkpoints:
        raise ContractError("accuracy matrix needs at least one checkpoint")
    columns = {}
    for step in sorted(checkpoints):
        result = evaluate(checkpoints[step], env_config, n_prompts, rollouts_per_prompt,
                          greedy=greedy, workers=workers)
        columns[step] = pd.Series(result.per_prompt)
        logger.debug(f"Accuracy column step {step}: mean {result.success_rate:.4f}")
    matrix = pd.DataFrame(columns)
    matrix.index.name = "prompt_id"
    return matrix
