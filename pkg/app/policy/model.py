"""Autoregressive token policies: distributions, exact gradients, sampling"""

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from app.core.errors import ContractError
from app.core.types import Prompt, Trajectory
from app.envs.tasks import EnvConfig, is_terminal, is_truncated, verify
from app.policy.params import MLP, TABULAR, PolicyParams

logger = logging.getLogger(__name__)

# prompt tokens followed by the response generated so far
Context = Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class TokenDistribution:
    """Next-token distribution; ``logprobs`` is the log-softmax it came from"""
    probs: np.ndarray
    logprobs: np.ndarray

    @property
    def size(self) -> int:
        return int(self.probs.shape[0])


def _window(params: PolicyParams, ctx: Sequence[int]) -> Tuple[int, ...]:
    """Last c tokens, most recent first, padded with -1"""
    c = params.context_window
    recent = list(ctx[-c:])[::-1]
    return tuple(recent) + (-1,) * (c - len(recent))


def table_row(params: PolicyParams, ctx: Sequence[int]) -> int:
    """Row of the logit table for a context; out-of-table windows share the last row"""
    base = params.vocab_size + 1
    code = 0
    scale = 1
    for token in _window(params, ctx):
        code += (token + 1) * scale
        scale *= base
        if code >= params.table_rows:
            return params.table_rows
    return code


def _mlp_slices(params: PolicyParams):
    h = params.hidden_width
    v = params.vocab_size
    n_in = params.context_window * (v + 1)
    o_w1 = 0
    o_b1 = o_w1 + h * n_in
    o_w2 = o_b1 + h
    o_b2 = o_w2 + v * h
    return n_in, o_w1, o_b1, o_w2, o_b2


def _mlp_active_inputs(params: PolicyParams, ctx: Sequence[int]) -> np.ndarray:
    """Indices of the one-hot input units switched on by the window"""
    v1 = params.vocab_size + 1
    return np.array([i * v1 + (token + 1) for i, token in enumerate(_window(params, ctx))], dtype=np.int64)


def _mlp_forward(params: PolicyParams, values: np.ndarray, ctx: Sequence[int]):
    h, v = params.hidden_width, params.vocab_size
    n_in, o_w1, o_b1, o_w2, o_b2 = _mlp_slices(params)
    w1 = values[o_w1:o_b1].reshape(h, n_in)
    b1 = values[o_b1:o_w2]
    w2 = values[o_w2:o_b2].reshape(v, h)
    b2 = values[o_b2:]
    active = _mlp_active_inputs(params, ctx)
    z1 = w1[:, active].sum(axis=1) + b1
    a1 = np.maximum(z1, 0.0)
    z2 = w2 @ a1 + b2
    return active, z1, a1, w2, z2


def _logits(params: PolicyParams, values: np.ndarray, ctx: Sequence[int]) -> np.ndarray:
    if params.arch == TABULAR:
        v = params.vocab_size
        row = table_row(params, ctx)
        return values[row * v:(row + 1) * v]
    _, _, _, _, z2 = _mlp_forward(params, values, ctx)
    return z2


def log_softmax(z: np.ndarray) -> np.ndarray:
    """Log-softmax with max subtraction; log1p keeps near-certain tokens off exact zero"""
    z = np.asarray(z, dtype=np.float64)
    top = int(np.argmax(z))
    shifted = z - z[top]
    rest = np.exp(shifted)
    rest[top] = 0.0
    return shifted - np.log1p(rest.sum())


def distribution(params: PolicyParams, ctx: Sequence[int]) -> TokenDistribution:
    """π_θ(· | ctx)"""
    logprobs = log_softmax(_logits(params, params.values, ctx))
    return TokenDistribution(probs=np.exp(logprobs), logprobs=logprobs)


def _check_token(params: PolicyParams, token: int) -> None:
    if not 0 <= token < params.vocab_size:
        raise ContractError(f"token {token} outside vocab of size {params.vocab_size}")


def log_prob(params: PolicyParams, ctx: Sequence[int], token: int) -> float:
    """ln π_θ(token | ctx), computed in log space"""
    _check_token(params, token)
    return float(log_softmax(_logits(params, params.values, ctx))[token])


def accumulate_grad_log_prob(params: PolicyParams, ctx: Sequence[int], token: int,
                             scale: float, out: np.ndarray) -> None:
    """out += scale * ∇_θ ln π_θ(token | ctx), touching only the active parameters"""
    _check_token(params, token)
    v = params.vocab_size

    if params.arch == TABULAR:
        row = table_row(params, ctx)
        logprobs = log_softmax(params.values[row * v:(row + 1) * v])
        g = -np.exp(logprobs)
        g[token] += 1.0
        out[row * v:(row + 1) * v] += scale * g
        return

    h = params.hidden_width
    n_in, o_w1, o_b1, o_w2, o_b2 = _mlp_slices(params)
    active, z1, a1, w2, z2 = _mlp_forward(params, params.values, ctx)
    g = -np.exp(log_softmax(z2))
    g[token] += 1.0

    out[o_w2:o_b2] += scale * np.outer(g, a1).ravel()
    out[o_b2:] += scale * g
    dz1 = (w2.T @ g) * (z1 > 0.0)
    out[o_b1:o_w2] += scale * dz1
    w1_grad = out[o_w1:o_b1].reshape(h, n_in)
    for col in active:
        w1_grad[:, col] += scale * dz1


def grad_log_prob(params: PolicyParams, ctx: Sequence[int], token: int) -> np.ndarray:
    """Exact ∇_θ ln π_θ(token | ctx) as a flat vector"""
    out = np.zeros(params.dim)
    accumulate_grad_log_prob(params, ctx, token, 1.0, out)
    return out


def finite_diff_grad(params: PolicyParams, ctx: Sequence[int], token: int, h: float = 1e-5) -> np.ndarray:
    """Central-difference estimate of ∇_θ ln π_θ(token | ctx); the independent oracle"""
    if h <= 0:
        raise ContractError(f"finite-difference step must be positive, got {h}")
    _check_token(params, token)

    base = np.array(params.values, dtype=np.float64)
    grad = np.zeros_like(base)
    for i in range(base.shape[0]):
        saved = base[i]
        base[i] = saved + h
        f_plus = log_softmax(_logits(params, base, ctx))[token]
        base[i] = saved - h
        f_minus = log_softmax(_logits(params, base, ctx))[token]
        base[i] = saved
        grad[i] = (f_plus - f_minus) / (2.0 * h)
    return grad


def sample_token(probs: np.ndarray, u: float) -> int:
    """Inverse-CDF draw; cumulative sum in ascending token id order"""
    cdf = np.cumsum(probs)
    idx = int(np.searchsorted(cdf, u, side="right"))
    return min(idx, probs.shape[0] - 1)


def generate(params: PolicyParams, prompt: Prompt, env_config: EnvConfig, rng: np.random.Generator,
             record_entropy: bool = True, prefix: Sequence[int] = (), greedy: bool = False) -> Trajectory:
    """Sample a response until the environment says stop, then score it.

    ``prefix`` forces the first response tokens (partial rollouts); their
    log-probs and entropies are recomputed under ``params``. One uniform is
    drawn per sampled token, so the trajectory is a pure function of the stream.
    When ``record_entropy`` is off the entropies are stored as zeros.
    """
    from app.first_return.entropy import token_entropy

    response = []
    logprobs = []
    entropies = []

    def step(token=None):
        ctx = prompt.tokens + tuple(response)
        dist = distribution(params, ctx)
        if token is None:
            if greedy:
                token = int(np.argmax(dist.probs))
            else:
                token = sample_token(dist.probs, float(rng.random()))
        response.append(int(token))
        logprobs.append(float(dist.logprobs[token]))
        entropies.append(token_entropy(dist) if record_entropy else 0.0)

    for token in prefix:
        _check_token(params, token)
        step(int(token))
    while not is_terminal(env_config, response):
        step()

    return Trajectory(
        prompt_id=prompt.id,
        response=tuple(response),
        logprobs=tuple(logprobs),
        entropies=tuple(entropies),
        reward=verify(env_config, prompt, response),
        truncated=is_truncated(env_config, response),
    )
