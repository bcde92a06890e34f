"""Training loop: two-stage entropy-guided exploration (fr3e) and the GRPO++ baseline.

Per step: generate waves of G rollouts per prompt until the rejection filter
has kept a full batch (or the wave cap is hit), then build advantages
(stage-1 group advantages, plus value-modulated stage-2 advantages for fr3e),
then run the clip-higher update over shuffled mini-batches.

Randomness is keyed by unit of work:
  stage-1 rollouts   (train.seed, STAGE1, prompt draw index)
  stage-2 rollouts   (train.seed, STAGE2, step, batch slot, state index)
  mini-batch shuffle (train.seed, SHUFFLE, step)
so both algorithms see the same prompts and stage-1 data, and the worker
count never changes a result.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from tqdm import tqdm

from app.core.errors import ContractError, TrainingAborted
from app.core.records import write_records
from app.core.streams import Purpose, make_stream
from app.core.types import PromptGroup, TrajectoryRecord
from app.envs.tasks import draw_prompt
from app.explore.rollouts import GroupClass, RolloutGroup, classify_group, empirical_value, partial_rollouts
from app.explore.rollouts import rejection_filter
from app.explore.workers import fan_out
from app.first_return.entropy import entropy_profile
from app.first_return.segmentation import base_trajectory_index, build_states, segment, topk_positions
from app.harness.evaluation import evaluate
from app.harness.metrics import StepMetrics, append_metrics
from app.harness.settings import TrainConfig, write_config
from app.learner.advantages import STAGE2, AdvantageBatch, fr3e_advantages, stage1_advantages
from app.learner.batching import BatchAccumulator
from app.learner.loss import clip_higher_loss
from app.learner.optim import OptimState, apply_update, init_optim
from app.policy.model import generate
from app.policy.params import PolicyParams, init_params, save_checkpoint

import config

logger = logging.getLogger(__name__)

FR3E = "fr3e"
GRPO_PP = "grpo_pp"


@dataclass
class Exploration:
    """Stage-2 output for one prompt of the batch"""
    batch: AdvantageBatch
    groups: List[RolloutGroup] = field(default_factory=list)
    positions: Tuple[int, ...] = ()
    base_index: int = -1

    @property
    def tokens(self) -> int:
        return sum(g.continuation_tokens for g in self.groups)


@dataclass
class TrainResult:
    params: PolicyParams
    metrics: List[StepMetrics]
    checkpoints: Dict[int, PolicyParams]
    checkpoint_paths: List[Path] = field(default_factory=list)
    optim: Optional[OptimState] = None


def build_policy(cfg: TrainConfig) -> PolicyParams:
    p = cfg.policy
    return init_params(p.arch, cfg.env.vocab_size, context_window=p.context_window, hidden_width=p.hidden_width,
                       init_scale=p.init_scale, seed=p.seed, max_table_rows=p.max_table_rows)


def checkpoint_name(step: int) -> str:
    return f"step_{step:06d}.ckpt"


class Trainer:
    """Runs one experiment config; ``run`` may be called once"""

    def __init__(self, cfg: TrainConfig, out_dir: Optional[Path] = None, log_trajectories: bool = False,
                 workers: Optional[int] = None):
        self.cfg = cfg
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.log_trajectories = log_trajectories and self.out_dir is not None
        self.workers = config.ROLLOUT_WORKERS if workers is None else max(1, workers)

        self.params = build_policy(cfg)
        self.optim = init_optim(cfg.train.optimizer, cfg.train.lr, self.params.dim)
        self.accumulator = BatchAccumulator(cfg.train.batch_groups)
        self.metrics: List[StepMetrics] = []
        self.checkpoints: Dict[int, PolicyParams] = {}
        self.checkpoint_paths: List[Path] = []

        self._draws = 0
        self._generated_tokens = 0
        self._born: Dict[str, str] = {}

    # ------------------------------------------------------------------ setup

    def _prepare_out_dir(self) -> None:
        if self.out_dir is None:
            return
        self.out_dir.mkdir(parents=True, exist_ok=True)
        for name in (config.METRICS_FILE, config.TRAJECTORY_LOG_FILE):
            stale = self.out_dir / name
            if stale.exists():
                logger.warning(f"Overwriting {stale}")
                stale.unlink()
        write_config(self.out_dir / config.CONFIG_COPY_FILE, self.cfg)

    def _checkpoint(self, step: int) -> None:
        self.checkpoints[step] = self.params
        if self.out_dir is None:
            return
        path = save_checkpoint(self.out_dir / config.CHECKPOINT_DIR / checkpoint_name(step), self.params, step)
        self.checkpoint_paths.append(path)
        logger.info(f"Checkpoint step {step}: {path}")

    # ------------------------------------------------------------- generation

    def _generate_wave(self, step: int) -> List[PromptGroup]:
        """One prompt per batch slot, G stage-1 rollouts each"""
        env = self.cfg.env
        group_size = self.cfg.train.group_size
        seed = self.cfg.train.seed
        params = self.params
        indices = list(range(self._draws, self._draws + self.cfg.train.batch_groups))
        self._draws += len(indices)

        def rollout(draw_index: int) -> PromptGroup:
            prompt = draw_prompt(env, draw_index)
            try:
                rng = make_stream(seed, Purpose.STAGE1, draw_index)
                trajectories = tuple(generate(params, prompt, env, rng) for _ in range(group_size))
            except ContractError as e:
                raise TrainingAborted(step, prompt.id, str(e)) from e
            return PromptGroup(prompt=prompt, trajectories=trajectories)

        groups = fan_out(rollout, indices, self.workers)
        for g in groups:
            self._born[g.prompt.id] = params.snapshot_id
        return groups

    def _explore(self, step: int, slot: int, group: PromptGroup) -> Exploration:
        """Segment the base trajectory at its entropy peaks and roll out from each state"""
        fr3e = self.cfg.fr3e
        prompt = group.prompt
        try:
            base_index = base_trajectory_index(group)
            base = group.trajectories[base_index]
            profile = entropy_profile(self.params, base, prompt)
            positions = topk_positions(profile, fr3e.top_k, exclude_final=True)
            if not positions:
                return Exploration(batch=AdvantageBatch(entries=(), source=STAGE2), base_index=base_index)
            states = build_states(prompt, segment(base, positions))[1:]
            groups = [
                partial_rollouts(self.params, state, fr3e.rollouts_per_state, self.cfg.env,
                                 make_stream(self.cfg.train.seed, Purpose.STAGE2, step, slot, state.j))
                for state in states
            ]
            batch = fr3e_advantages(states, groups, empirical_value(group.rewards), modulate=fr3e.modulate)
        except ContractError as e:
            raise TrainingAborted(step, prompt.id, str(e)) from e
        return Exploration(batch=batch, groups=groups, positions=positions, base_index=base_index)

    # ----------------------------------------------------------------- update

    def _update(self, step: int, units: List[AdvantageBatch]) -> float:
        """mini_epochs passes over shuffled mini-batches of prompt units; returns the mean loss"""
        train = self.cfg.train
        rng = make_stream(train.seed, Purpose.SHUFFLE, step)
        size = train.mini_batch_groups or len(units)
        losses = []
        for _ in range(train.mini_epochs):
            order = rng.permutation(len(units))
            for start in range(0, len(units), size):
                chunk = AdvantageBatch.merge(*(units[i] for i in order[start:start + size]))
                if not len(chunk):
                    continue
                try:
                    loss, grad = clip_higher_loss(chunk, self.params, train.eps_low, train.eps_high)
                    self.params, self.optim = apply_update(self.params, grad, self.optim,
                                                           snapshot_id=f"step-{step}")
                except ContractError as e:
                    raise TrainingAborted(step, None, str(e)) from e
                losses.append(loss)
        return sum(losses) / len(losses) if losses else math.nan

    # ------------------------------------------------------------------- step

    def _step(self, step: int) -> StepMetrics:
        cfg = self.cfg
        row = StepMetrics(step=step, algorithm=cfg.train.algorithm)

        generated: List[PromptGroup] = []
        while not self.accumulator.ready and row.waves < cfg.train.max_waves:
            wave = self._generate_wave(step)
            row.waves += 1
            generated.extend(wave)
            try:
                kept, _ = rejection_filter(wave)
            except ContractError as e:
                raise TrainingAborted(step, None, str(e)) from e
            self.accumulator.offer(kept)
            logger.debug(f"Step {step} wave {row.waves}: kept {len(kept)}/{len(wave)}, "
                         f"buffered {len(self.accumulator)}")

        if self.accumulator.ready:
            batch = self.accumulator.take()
        else:
            batch = self.accumulator.drain()
            logger.warning(f"Step {step}: only {len(batch)}/{cfg.train.batch_groups} mixed groups "
                           f"after {row.waves} waves; training on a partial batch")

        for g in generated:
            cls = classify_group(g.rewards)
            row.stage1_all_right += cls == GroupClass.ALL_RIGHT
            row.stage1_all_wrong += cls == GroupClass.ALL_WRONG
            row.stage1_mixed += cls == GroupClass.MIXED
        row.stage1_groups = len(generated)
        row.rejected_prompt_count = row.stage1_all_right + row.stage1_all_wrong
        row.batch_groups = len(batch)
        row.buffered_groups = len(self.accumulator)

        trajectories = [t for g in (batch or generated) for t in g.trajectories]
        if trajectories:
            tokens = sum(t.length for t in trajectories)
            row.mean_token_entropy = sum(h for t in trajectories for h in t.entropies) / tokens
            row.mean_response_length = tokens / len(trajectories)

        explorations: List[Exploration] = []
        if cfg.train.algorithm == FR3E and cfg.fr3e.explores and batch:
            explorations = fan_out(lambda item: self._explore(step, *item), list(enumerate(batch)), self.workers)
            if not any(e.groups for e in explorations):
                logger.warning(f"Step {step}: no intermediate states to explore")

        units = []
        for slot, group in enumerate(batch):
            parts = []
            if cfg.train.algorithm == GRPO_PP or cfg.fr3e.include_base_loss:
                try:
                    parts.append(stage1_advantages([group], cfg.train.normalize_std))
                except ContractError as e:
                    raise TrainingAborted(step, group.prompt.id, str(e)) from e
            if explorations:
                parts.append(explorations[slot].batch)
            units.append(AdvantageBatch.merge(*parts))

        alphas = []
        for e in explorations:
            for g in e.groups:
                cls = g.group_class
                row.stage2_all_right += cls == GroupClass.ALL_RIGHT
                row.stage2_all_wrong += cls == GroupClass.ALL_WRONG
                row.stage2_mixed += cls == GroupClass.MIXED
            row.stage2_groups += len(e.groups)
            row.stage2_token_count += e.tokens
            alphas.extend(f.alpha if cfg.fr3e.modulate else 1.0 for f in e.batch.factors)
        if alphas:
            row.mean_alpha = sum(alphas) / len(alphas)

        # stage-2 rollouts were sampled before this step's update
        sampled_by = self.params.snapshot_id
        full = AdvantageBatch.merge(*units)
        row.token_count = len(full)
        row.advantage_mean, row.advantage_std = full.stats()
        if len(full):
            row.loss = self._update(step, units)
        else:
            logger.warning(f"Step {step}: empty training batch, parameters unchanged")

        row.generated_token_count = sum(t.length for g in generated for t in g.trajectories) + row.stage2_token_count
        self._generated_tokens += row.generated_token_count
        row.cumulative_generated_tokens = self._generated_tokens

        if self.log_trajectories:
            self._log_trajectories(step, batch, explorations, sampled_by)
        for g in batch:
            self._born.pop(g.prompt.id, None)

        for problem in row.conservation_errors():
            logger.error(f"Step {step} metrics inconsistent: {problem}")
        return row

    def _log_trajectories(self, step: int, batch: List[PromptGroup], explorations: List[Exploration],
                          sampled_by: str) -> None:
        records = []
        for slot, group in enumerate(batch):
            exploration = explorations[slot] if explorations else None
            snapshot = self._born.get(group.prompt.id, sampled_by)
            for i, traj in enumerate(group.trajectories):
                positions = exploration.positions if exploration and i == exploration.base_index else None
                records.append(TrajectoryRecord(trajectory=traj, step=step, snapshot_id=snapshot,
                                                positions=positions, stage="stage1"))
            if exploration:
                for rg in exploration.groups:
                    records.extend(
                        TrajectoryRecord(trajectory=t, step=step, snapshot_id=sampled_by, stage="stage2",
                                         prefix_len=rg.prefix_len)
                        for t in rg.rollouts
                    )
        write_records(self.out_dir / config.TRAJECTORY_LOG_FILE, records)

    def _should_eval(self, step: int) -> bool:
        every = self.cfg.eval.every
        return step == self.cfg.train.steps or (every > 0 and step % every == 0)

    def _should_checkpoint(self, step: int) -> bool:
        every = self.cfg.train.checkpoint_every
        return step == self.cfg.train.steps or (every > 0 and step % every == 0)

    # -------------------------------------------------------------------- run

    def run(self) -> TrainResult:
        cfg = self.cfg
        logger.info(f"Training {cfg.train.algorithm} on {cfg.env.family} "
                    f"(V={cfg.env.vocab_size}, D={cfg.env.prompt_len}) for {cfg.train.steps} steps, "
                    f"{cfg.policy.arch} policy with {self.params.dim} parameters")
        self._prepare_out_dir()
        self._checkpoint(0)

        steps = range(1, cfg.train.steps + 1)
        for step in tqdm(steps, desc=cfg.train.algorithm, disable=not config.PROGRESS):
            row = self._step(step)
            if self._should_eval(step):
                result = evaluate(self.params, cfg.env, cfg.eval.prompts, cfg.eval.rollouts,
                                  greedy=cfg.eval.greedy, workers=self.workers)
                row.eval_success_rate = result.success_rate
                logger.info(f"Step {step}: eval success {result.success_rate:.4f}, "
                            f"mean entropy {row.mean_token_entropy:.4f}")
            self.metrics.append(row)
            if self.out_dir is not None:
                append_metrics(self.out_dir / config.METRICS_FILE, row)
            if self._should_checkpoint(step):
                self._checkpoint(step)

        return TrainResult(params=self.params, metrics=self.metrics, checkpoints=self.checkpoints,
                           checkpoint_paths=self.checkpoint_paths, optim=self.optim)


def train(cfg: TrainConfig, out_dir: Optional[Path] = None, log_trajectories: bool = False,
          workers: Optional[int] = None) -> TrainResult:
    """Run an experiment; returns final params, the metrics log and the checkpoints"""
    return Trainer(cfg, out_dir=out_dir, log_trajectories=log_trajectories, workers=workers).run()
