"""ForkPulse command line"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from app.core.errors import ForkPulseError

import config

# Configure logging
logging.basicConfig(
    level=getattr(logging, config.LOG_LEVEL, logging.INFO),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)
logger = logging.getLogger(__name__)


def cmd_train(args: argparse.Namespace) -> int:
    from app.harness import load_config, train

    cfg = load_config(args.config)
    out_dir = Path(args.out) if args.out else config.RUNS_DIR / Path(args.config).stem
    result = train(cfg, out_dir=out_dir, log_trajectories=args.log_trajectories)
    last = result.metrics[-1] if result.metrics else None
    if last is not None:
        logger.info(f"Finished {len(result.metrics)} steps; final eval success {last.eval_success_rate:.4f}")
    logger.info(f"Run directory: {out_dir}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    from app.harness import evaluate, load_config
    from app.policy.params import load_checkpoint

    cfg = load_config(args.config)
    params, step = load_checkpoint(Path(args.checkpoint))
    prompts = args.prompts or cfg.eval.prompts
    rollouts = args.rollouts or cfg.eval.rollouts
    result = evaluate(params, cfg.env, prompts, rollouts, greedy=args.greedy or cfg.eval.greedy,
                      workers=config.ROLLOUT_WORKERS)
    print(json.dumps(dict(result.to_dict(), step=step), indent=2))
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    from app.harness import compare, load_config

    report = compare(load_config(args.config_a), load_config(args.config_b), out_dir=Path(args.out),
                     workers=config.ROLLOUT_WORKERS)
    print(report.verdict, end="")
    return 0


def cmd_report_tokens(args: argparse.Namespace) -> int:
    from app.core.records import read_records
    from app.harness import entropy_token_report

    table = entropy_token_report(read_records(Path(args.log)), top_n=args.top, min_count=args.min_count)
    print(table.to_csv(index=False), end="")
    return 0


def cmd_report_accuracy(args: argparse.Namespace) -> int:
    from app.harness import accuracy_matrix, load_checkpoints, load_config

    cfg = load_config(args.config)
    checkpoints_dir = Path(args.checkpoints)
    matrix = accuracy_matrix(load_checkpoints(checkpoints_dir), cfg.env, cfg.eval.prompts, cfg.eval.rollouts,
                             greedy=cfg.eval.greedy, workers=config.ROLLOUT_WORKERS)
    out = Path(args.out) if args.out else checkpoints_dir.parent / config.ACCURACY_FILE
    matrix.to_csv(out)
    logger.info(f"Accuracy matrix ({matrix.shape[0]} prompts x {matrix.shape[1]} checkpoints): {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="forkpulse",
                                     description="Entropy-guided exploration for sequence policies")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="Train a policy from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="Run directory (default: $FORKPULSE_RUNS_DIR/<config name>)")
    p.add_argument("--log-trajectories", action="store_true", help="Write the trajectory log")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="Evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--prompts", type=int)
    p.add_argument("--rollouts", type=int)
    p.add_argument("--greedy", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="Train two configs and compare them")
    p.add_argument("--config-a", required=True)
    p.add_argument("--config-b", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    report = sub.add_parser("report", help="Reports over run artifacts")
    report_sub = report.add_subparsers(dest="report", required=True)

    p = report_sub.add_parser("tokens", help="Tokens ranked by mean emission entropy")
    p.add_argument("--log", required=True)
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--min-count", type=int, default=config.TOKEN_FLOOR)
    p.set_defaults(func=cmd_report_tokens)

    p = report_sub.add_parser("accuracy", help="Per-prompt success across checkpoints")
    p.add_argument("--checkpoints", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report_accuracy)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ForkPulseError as e:
        logger.error(f"{args.command} failed: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
