"""Seeded random streams.

Every random draw in ForkPulse comes from a stream keyed by
(root seed, purpose, indices...). Streams are keyed by the unit of work
(step, prompt, state), never by worker, so results do not depend on how many
rollout workers run.
"""

from enum import IntEnum

import numpy as np


class Purpose(IntEnum):
    PROMPT = 1
    STAGE1 = 2
    STAGE2 = 3
    EVAL_PROMPT = 4
    EVAL_ROLLOUT = 5
    SHUFFLE = 6
    INIT = 7


def make_stream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for the given key path"""
    entropy = [int(seed)] + [int(k) for k in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
