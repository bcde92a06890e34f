"""Success-rate evaluation on a fixed prompt set"""

import logging
from dataclasses import dataclass
from typing import Dict, List

from app.core.errors import ContractError
from app.core.streams import Purpose, make_stream
from app.core.types import Prompt
from app.envs.tasks import EnvConfig, draw_prompt
from app.explore.workers import fan_out
from app.policy.model import generate
from app.policy.params import PolicyParams

logger = logging.getLogger(__name__)


@dataclass
class EvalResult:
    success_rate: float
    per_prompt: Dict[str, float]
    rollouts: int

    def to_dict(self) -> Dict:
        return {
            "success_rate": self.success_rate,
            "rollouts": self.rollouts,
            "per_prompt": dict(self.per_prompt),
        }


def eval_prompts(env_config: EnvConfig, n_prompts: int) -> List[Prompt]:
    """The evaluation set: ``n_prompts`` prompts fixed by the env seed"""
    return [draw_prompt(env_config, i, Purpose.EVAL_PROMPT) for i in range(n_prompts)]


def evaluate(params: PolicyParams, env_config: EnvConfig, n_prompts: int, rollouts_per_prompt: int,
             greedy: bool = False, workers: int = 1) -> EvalResult:
    """avg@k success rate; greedy decoding scores one argmax response per prompt"""
    if n_prompts < 1:
        raise ContractError(f"evaluation needs at least one prompt, got {n_prompts}")
    if rollouts_per_prompt < 1:
        raise ContractError(f"evaluation needs at least one rollout per prompt, got {rollouts_per_prompt}")

    prompts = eval_prompts(env_config, n_prompts)
    k = 1 if greedy else rollouts_per_prompt

    def score(indexed) -> float:
        i, prompt = indexed
        rng = make_stream(env_config.seed, Purpose.EVAL_ROLLOUT, i)
        wins = sum(
            generate(params, prompt, env_config, rng, record_entropy=False, greedy=greedy).reward
            for _ in range(k)
        )
        return wins / k

    rates = fan_out(score, list(enumerate(prompts)), workers)
    per_prompt = {p.id: r for p, r in zip(prompts, rates)}
    success = sum(rates) / len(rates)
    logger.debug(f"Evaluated {params.snapshot_id}: success {success:.4f} over {n_prompts} prompts x {k}")
    return EvalResult(success_rate=success, per_prompt=per_prompt, rollouts=k)
