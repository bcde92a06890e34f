"""Batch accumulation across generation waves"""

import logging
from collections import deque
from typing import Iterable, Iterator, List, Sequence

from app.core.errors import ContractError
from app.core.types import PromptGroup

logger = logging.getLogger(__name__)


class BatchAccumulator:
    """FIFO buffer of kept prompt groups; releases exactly ``target_size`` at a time"""

    def __init__(self, target_size: int):
        if target_size < 1:
            raise ContractError(f"batch target must be >= 1, got {target_size}")
        self.target_size = target_size
        self._buffer = deque()

    def __len__(self) -> int:
        return len(self._buffer)

    @property
    def ready(self) -> bool:
        return len(self._buffer) >= self.target_size

    def offer(self, groups: Sequence[PromptGroup]) -> None:
        self._buffer.extend(groups)

    def take(self) -> List[PromptGroup]:
        """Release the oldest ``target_size`` groups"""
        if not self.ready:
            raise ContractError(f"only {len(self._buffer)} of {self.target_size} groups buffered")
        return [self._buffer.popleft() for _ in range(self.target_size)]

    def drain(self) -> List[PromptGroup]:
        """Release whatever is buffered (used when the wave cap is hit)"""
        groups = list(self._buffer)
        self._buffer.clear()
        return groups


def accumulate_batch(waves: Iterable[Sequence[PromptGroup]], target_size: int) -> Iterator[List[PromptGroup]]:
    """Yield full batches as post-rejection waves arrive; leftovers wait for the next batch"""
    acc = BatchAccumulator(target_size)
    for wave in waves:
        acc.offer(wave)
        while acc.ready:
            yield acc.take()
