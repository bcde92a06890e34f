"""Parameter updates: plain SGD and Adam"""

import logging
from dataclasses import dataclass, replace
from typing import Literal, Optional, Tuple

import numpy as np

from app.core.errors import ContractError
from app.policy.params import PolicyParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class OptimState:
    kind: Literal["sgd", "adam"]
    lr: float
    step: int = 0
    m: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = None
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_optim(kind: str, lr: float, dim: int) -> OptimState:
    if kind == "sgd":
        return OptimState(kind="sgd", lr=lr)
    if kind == "adam":
        return OptimState(kind="adam", lr=lr, m=np.zeros(dim), v=np.zeros(dim))
    raise ContractError(f"unknown optimizer: {kind}")


def apply_update(params: PolicyParams, gradient: np.ndarray, optim: OptimState,
                 snapshot_id: Optional[str] = None) -> Tuple[PolicyParams, OptimState]:
    """One descent step on the loss; returns new params and optimizer state"""
    gradient = np.asarray(gradient, dtype=np.float64)
    if gradient.shape != (params.dim,):
        raise ContractError(f"gradient shape {gradient.shape} does not match {params.dim} parameters")
    bad = np.flatnonzero(~np.isfinite(gradient))
    if bad.size:
        raise ContractError(f"gradient has {bad.size} non-finite entries (first at index {bad[0]}: "
                            f"{gradient[bad[0]]})")

    step = optim.step + 1
    if optim.kind == "sgd":
        values = params.values - optim.lr * gradient
        new_optim = replace(optim, step=step)
    else:
        if optim.m is None or optim.m.shape != gradient.shape:
            raise ContractError("adam moments do not match the parameter dimension")
        m = optim.beta1 * optim.m + (1.0 - optim.beta1) * gradient
        v = optim.beta2 * optim.v + (1.0 - optim.beta2) * gradient * gradient
        m_hat = m / (1.0 - optim.beta1 ** step)
        v_hat = v / (1.0 - optim.beta2 ** step)
        values = params.values - optim.lr * m_hat / (np.sqrt(v_hat) + optim.eps)
        new_optim = replace(optim, step=step, m=m, v=v)

    return params.with_values(values, snapshot_id=snapshot_id), new_optim
