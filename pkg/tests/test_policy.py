import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.core import ConfigError, ContractError, Prompt, make_stream
from app.envs import EnvConfig
from app.policy import (
    MLP,
    TABULAR,
    distribution,
    finite_diff_grad,
    generate,
    grad_log_prob,
    init_params,
    load_checkpoint,
    log_prob,
    parameter_count,
    sample_token,
    save_checkpoint,
)
from app.policy.model import _mlp_forward, table_row

from conftest import random_params


def rel_error(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b)) / max(1e-8, np.max(np.abs(a)), np.max(np.abs(b))))


def with_row(params, ctx, logits):
    """Copy of params whose table row for ``ctx`` holds ``logits``"""
    v = params.vocab_size
    row = table_row(params, ctx)
    values = np.array(params.values)
    values[row * v:(row + 1) * v] = logits
    return params.with_values(values)


def test_zero_tabular_params_are_uniform():
    params = init_params(TABULAR, 4, context_window=2)
    assert np.allclose(distribution(params, (0, 3)).probs, 0.25, atol=1e-15)
    assert log_prob(params, (0, 3), 2) == pytest.approx(math.log(0.25), abs=1e-12)


def test_zero_init_mlp_is_uniform():
    params = init_params(MLP, 3, context_window=2, hidden_width=5)
    assert np.allclose(distribution(params, (1, 2, 0)).probs, 1 / 3, atol=1e-15)


def test_softmax_of_hand_logits():
    params = with_row(init_params(TABULAR, 2, context_window=2), (1, 0), [math.log(3.0), 0.0])
    assert np.allclose(distribution(params, (1, 0)).probs, [0.75, 0.25], atol=1e-12)


def test_log_prob_stays_finite_for_near_certain_tokens():
    params = with_row(init_params(TABULAR, 2, context_window=1), (0,), [50.0, 0.0])
    lp = log_prob(params, (0,), 0)
    assert lp < 0.0
    assert lp == pytest.approx(-math.exp(-50.0), rel=1e-9)
    assert log_prob(params, (0,), 1) == pytest.approx(-50.0, abs=1e-12)


@given(seed=st.integers(0, 10_000), arch=st.sampled_from([TABULAR, MLP]),
       ctx=st.lists(st.integers(0, 2), min_size=1, max_size=6))
@settings(max_examples=100, deadline=None)
def test_distribution_is_normalised(seed, arch, ctx):
    params = random_params(arch, 3, 3, seed, scale=3.0)
    dist = distribution(params, tuple(ctx))
    assert np.all(dist.probs >= 0.0)
    assert abs(dist.probs.sum() - 1.0) <= 1e-12
    for token in range(3):
        assert math.exp(log_prob(params, tuple(ctx), token)) == pytest.approx(dist.probs[token], abs=1e-12)


def test_log_prob_rejects_tokens_outside_vocab():
    params = init_params(TABULAR, 2, context_window=1)
    with pytest.raises(ContractError):
        log_prob(params, (0,), 2)


def test_tabular_gradient_is_onehot_minus_probs():
    params = init_params(TABULAR, 2, context_window=1)
    row = table_row(params, (1,))
    grad = grad_log_prob(params, (1,), 0)
    assert np.allclose(grad[row * 2:row * 2 + 2], [0.5, -0.5], atol=1e-15)
    assert np.count_nonzero(grad) == 2
    fd = finite_diff_grad(params, (1,), 0)
    assert np.allclose(fd[row * 2:row * 2 + 2], [0.5, -0.5], atol=1e-6)


def test_finite_diff_is_zero_on_inactive_coordinates():
    params = random_params(TABULAR, 3, 2, seed=4)
    row = table_row(params, (2, 1))
    fd = finite_diff_grad(params, (2, 1), 1)
    mask = np.ones(params.dim, dtype=bool)
    mask[row * 3:(row + 1) * 3] = False
    assert np.all(np.abs(fd[mask]) <= 1e-9)
    with pytest.raises(ContractError):
        finite_diff_grad(params, (2, 1), 1, h=0.0)


@given(seed=st.integers(0, 10_000), ctx=st.lists(st.integers(0, 3), min_size=1, max_size=5),
       token=st.integers(0, 3))
@settings(max_examples=50, deadline=None)
def test_tabular_gradient_row_sums_to_zero(seed, ctx, token):
    params = random_params(TABULAR, 4, 2, seed)
    assert abs(grad_log_prob(params, tuple(ctx), token).sum()) <= 1e-12


def near_relu_kink(params, ctx) -> bool:
    if params.arch != MLP:
        return False
    _, z1, _, _, _ = _mlp_forward(params, params.values, ctx)
    return bool(np.min(np.abs(z1)) < 1e-3)


@pytest.mark.parametrize("arch", [TABULAR, MLP])
def test_gradient_matches_central_differences(arch):
    rng = np.random.default_rng(17)
    worst = 0.0
    checked = 0
    for case in range(220):
        params = random_params(arch, 3, 3, seed=case, hidden_width=5, scale=1.5)
        ctx = tuple(int(t) for t in rng.integers(0, 3, size=rng.integers(1, 6)))
        token = int(rng.integers(0, 3))
        if near_relu_kink(params, ctx):
            continue
        worst = max(worst, rel_error(grad_log_prob(params, ctx, token), finite_diff_grad(params, ctx, token)))
        checked += 1
    assert checked >= 200
    assert worst < 1e-4


def test_out_of_table_windows_share_default_row():
    params = init_params(TABULAR, 2, context_window=4, max_table_rows=10)
    assert params.table_rows == 10
    assert params.dim == parameter_count(TABULAR, 2, 4, table_rows=10) == 22
    assert table_row(params, (1, 1, 1, 1)) == 10
    assert table_row(params, (0, 1, 0, 1)) == table_row(params, (1, 1, 1, 1))


def test_invalid_architecture_is_a_config_error():
    with pytest.raises(ConfigError):
        init_params(TABULAR, 2, context_window=0)
    with pytest.raises(ConfigError):
        init_params("transformer", 2)


def test_sample_token_inverse_cdf():
    probs = np.array([0.25, 0.75])
    assert sample_token(probs, 0.1) == 0
    assert sample_token(probs, 0.25) == 1
    assert sample_token(probs, 0.999999) == 1


def test_delta_policy_repeats_its_token():
    base = init_params(TABULAR, 2, context_window=2)
    values = np.tile([0.0, 60.0], base.dim // 2)
    params = base.with_values(values)
    env = EnvConfig(family="parity_sum", vocab_size=2, prompt_len=4)
    prompt = Prompt(id="p0", tokens=(1, 0, 0, 0), env_tag="parity_sum")
    traj = generate(params, prompt, env, make_stream(0, 9))
    assert traj.response == (1, 1, 1, 1)
    assert max(traj.entropies) < 1e-20
    assert traj.reward == 0


def test_generate_is_deterministic(copy_env, prompt):
    params = random_params(TABULAR, 2, 6, seed=2)
    a = generate(params, prompt, copy_env, make_stream(1, 2, 3))
    b = generate(params, prompt, copy_env, make_stream(1, 2, 3))
    assert a == b
    assert len(a.logprobs) == len(a.entropies) == 3


def test_generate_without_entropy_records_zeros(copy_env, prompt):
    params = random_params(TABULAR, 2, 6, seed=2)
    traj = generate(params, prompt, copy_env, make_stream(1), record_entropy=False)
    assert traj.entropies == (0.0, 0.0, 0.0)


def test_generate_keeps_forced_prefix(copy_env, prompt):
    params = random_params(TABULAR, 2, 6, seed=8)
    traj = generate(params, prompt, copy_env, make_stream(4), prefix=(1, 0))
    assert traj.response[:2] == (1, 0)
    assert traj.logprobs[0] == pytest.approx(log_prob(params, prompt.tokens, 1), abs=1e-15)


def test_uniform_policy_on_parity_scores_half(parity_env):
    params = init_params(TABULAR, 2, context_window=4)
    rng = make_stream(0, 3)
    prompt = Prompt(id="p0", tokens=(1, 0, 1, 1), env_tag="parity_sum")
    n = 10_000
    mean = sum(generate(params, prompt, parity_env, rng, record_entropy=False).reward for _ in range(n)) / n
    assert abs(mean - 0.5) <= 4 * math.sqrt(0.25 / n)


def test_checkpoint_round_trip(tmp_path):
    base = random_params(MLP, 3, 2, seed=6)
    params = base.with_values(base.values, snapshot_id="step-4")
    path = save_checkpoint(tmp_path / "ckpt" / "step_000004.ckpt", params, step=4)
    loaded, step = load_checkpoint(path)
    assert step == 4
    assert loaded.arch == MLP and loaded.snapshot_id == "step-4"
    assert np.array_equal(loaded.values, params.values)


def test_truncated_checkpoint_is_rejected(tmp_path):
    path = save_checkpoint(tmp_path / "c.ckpt", init_params(TABULAR, 2, context_window=1), step=0)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(ContractError):
        load_checkpoint(path)
