"""ForkPulse runtime settings"""

import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

# Base paths
BASE_DIR = Path(__file__).parent
RUNS_DIR = Path(os.getenv("FORKPULSE_RUNS_DIR", str(BASE_DIR / "runs")))

# Logging
LOG_LEVEL = os.getenv("FORKPULSE_LOG_LEVEL", "INFO").upper()
PROGRESS = os.getenv("FORKPULSE_PROGRESS", "true").lower() == "true"

# Rollout workers (threads). Results never depend on this value.
ROLLOUT_WORKERS = max(1, int(os.getenv("FORKPULSE_WORKERS", "1")))

# Fallback checkpoint cadence when a config omits train.checkpoint_every
CHECKPOINT_EVERY = int(os.getenv("FORKPULSE_CHECKPOINT_EVERY", "10"))

# Token-entropy report: tokens seen fewer times are left out
TOKEN_FLOOR = int(os.getenv("FORKPULSE_TOKEN_FLOOR", "5"))

# Output file names
METRICS_FILE = "metrics.csv"
COMPARE_FILE = "compare.csv"
COMPARE_TOKENS_FILE = "compare_tokens.csv"
COMPARE_VERDICT_FILE = "verdict.txt"
ACCURACY_FILE = "accuracy_matrix.csv"
TRAJECTORY_LOG_FILE = "trajectories.jsonl"
CONFIG_COPY_FILE = "config.txt"
CHECKPOINT_DIR = "checkpoints"
