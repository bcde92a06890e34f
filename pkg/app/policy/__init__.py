"""Differentiable autoregressive token policies"""

from app.policy.params import (
    MLP,
    TABULAR,
    PolicyParams,
    init_params,
    load_checkpoint,
    parameter_count,
    save_checkpoint,
)
from app.policy.model import (
    Context,
    TokenDistribution,
    accumulate_grad_log_prob,
    distribution,
    finite_diff_grad,
    generate,
    grad_log_prob,
    log_prob,
    log_softmax,
    sample_token,
)

__all__ = [
    "MLP",
    "TABULAR",
    "PolicyParams",
    "init_params",
    "load_checkpoint",
    "parameter_count",
    "save_checkpoint",
    "Context",
    "TokenDistribution",
    "accumulate_grad_log_prob",
    "distribution",
    "finite_diff_grad",
    "generate",
    "grad_log_prob",
    "log_prob",
    "log_softmax",
    "sample_token",
]
