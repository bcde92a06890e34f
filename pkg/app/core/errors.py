"""Error types shared across ForkPulse"""

from typing import Optional


class ForkPulseError(Exception):
    """Base class for every error ForkPulse raises on purpose"""


class ContractError(ForkPulseError, ValueError):
    """An operation was called with inputs outside its precondition"""


class ConfigError(ForkPulseError, ValueError):
    """Invalid or mismatched experiment configuration"""


class TrainingAborted(ForkPulseError):
    """A contract error stopped training; carries where it happened"""

    def __init__(self, step: int, prompt_id: Optional[str], reason: str):
        self.step = step
        self.prompt_id = prompt_id
        self.reason = reason
        super().__init__(f"training aborted at step {step} (prompt {prompt_id or '-'}): {reason}")
