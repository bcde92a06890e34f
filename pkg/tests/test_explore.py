import math

import pytest

from app.core import ContractError, Prompt, PromptGroup, make_stream
from app.envs import EnvConfig
from app.explore import (
    GroupClass,
    classify_group,
    empirical_value,
    exact_value,
    fan_out,
    partial_rollouts,
    rejection_filter,
)
from app.first_return import EntropyProfile, IntermediateState, build_states, segment, topk_positions
from app.policy import TABULAR, generate, init_params

from conftest import make_group, random_params


@pytest.mark.parametrize("rewards, value", [([1, 0, 1, 0], 0.5), ([1, 1, 1], 1.0), ([0] * 7 + [1], 0.125)])
def test_empirical_value(rewards, value):
    assert empirical_value(rewards) == value


def test_empirical_value_of_nothing():
    with pytest.raises(ContractError):
        empirical_value([])


@pytest.mark.parametrize("rewards, cls", [
    ([1, 1, 1, 1], GroupClass.ALL_RIGHT),
    ([0, 0], GroupClass.ALL_WRONG),
    ([1, 0], GroupClass.MIXED),
])
def test_classify_group(rewards, cls):
    assert classify_group(rewards) == cls


def test_rejection_filter_keeps_mixed_groups_in_order(prompt):
    groups = [
        make_group(prompt, [[1], [1]], [1, 1]),
        make_group(prompt, [[0], [0]], [0, 0]),
        make_group(prompt, [[1], [0]], [1, 0]),
        make_group(prompt, [[0], [1], [1]], [0, 1, 1]),
    ]
    kept, rejected = rejection_filter(groups)
    assert kept == [groups[2], groups[3]]
    assert rejected == 2
    assert all(classify_group(g.rewards) == GroupClass.MIXED for g in kept)
    assert rejection_filter(kept) == (kept, 0)


def test_rejection_filter_needs_two_rollouts(prompt):
    with pytest.raises(ContractError):
        rejection_filter([make_group(prompt, [[1]], [1])])


def test_rejected_count_matches_degenerate_groups():
    env = EnvConfig(family="copy_seq", vocab_size=2, prompt_len=2, seed=1)
    params = init_params(TABULAR, 2, context_window=4)
    groups = []
    for i in range(200):
        prompt = Prompt(id=f"p{i}", tokens=(i % 2, (i // 2) % 2), env_tag="copy_seq")
        rng = make_stream(0, i)
        trajectories = tuple(generate(params, prompt, env, rng) for _ in range(3))
        groups.append(PromptGroup(prompt=prompt, trajectories=trajectories))
    kept, rejected = rejection_filter(groups)
    degenerate = sum(classify_group(g.rewards) != GroupClass.MIXED for g in groups)
    assert rejected == degenerate
    assert len(kept) + rejected == len(groups)


def test_partial_rollouts_keep_the_prefix():
    env = EnvConfig(family="parity_sum", vocab_size=2, prompt_len=4)
    prompt = Prompt(id="p0", tokens=(1, 0, 0, 1), env_tag="parity_sum")
    state = IntermediateState(j=1, tokens=prompt.tokens + (1, 1), prompt=prompt)
    group = partial_rollouts(random_params(TABULAR, 2, 4, seed=1), state, 6, env, make_stream(2))
    assert group.state_index == 1 and group.prefix_len == 2
    assert all(t.response[:2] == (1, 1) and t.length == 4 for t in group.rollouts)
    assert group.value == sum(group.rewards) / 6
    assert group.continuation_tokens == 12


def test_terminal_state_adds_no_tokens(copy_env, prompt):
    state = IntermediateState(j=2, tokens=prompt.tokens + (1, 0, 1), prompt=prompt)
    group = partial_rollouts(init_params(TABULAR, 2, context_window=2), state, 3, copy_env, make_stream(0))
    assert group.continuation_tokens == 0
    assert group.rewards == (1, 1, 1)


def test_partial_rollouts_need_a_rollout(copy_env, prompt):
    state = IntermediateState(j=0, tokens=prompt.tokens, prompt=prompt)
    with pytest.raises(ContractError):
        partial_rollouts(init_params(TABULAR, 2, context_window=2), state, 0, copy_env, make_stream(0))


def test_uniform_value_from_fixed_bits():
    env = EnvConfig(family="parity_sum", vocab_size=2, prompt_len=4)
    prompt = Prompt(id="p0", tokens=(1, 1, 0, 1), env_tag="parity_sum")
    params = init_params(TABULAR, 2, context_window=4)
    state = IntermediateState(j=2, tokens=prompt.tokens + (1, 0), prompt=prompt)
    assert exact_value(params, prompt, (1, 0), env) == pytest.approx(0.5, abs=1e-12)
    m = 10_000
    group = partial_rollouts(params, state, m, env, make_stream(5))
    assert abs(group.value - 0.5) <= 4 * math.sqrt(0.25 / m)


def test_exact_value_counts_every_continuation(copy_env, prompt):
    params = init_params(TABULAR, 2, context_window=2)
    assert exact_value(params, prompt, (), copy_env) == pytest.approx(1 / 8, abs=1e-12)
    assert exact_value(params, prompt, (1,), copy_env) == pytest.approx(1 / 4, abs=1e-12)
    assert exact_value(params, prompt, (0,), copy_env) == 0.0


@pytest.mark.slow
def test_monte_carlo_value_brackets_exact_value():
    env = EnvConfig(family="parity_sum", vocab_size=2, prompt_len=6)
    params = random_params(TABULAR, 2, 6, seed=21, scale=1.0)
    m = 10_000
    for case in range(20):
        rng = make_stream(99, case)
        prompt = Prompt(id=f"p{case}", tokens=tuple(int(b) for b in rng.integers(0, 2, size=6)),
                        env_tag="parity_sum")
        base = generate(params, prompt, env, rng)
        profile = EntropyProfile(values=tuple(rng.random(6)))
        states = build_states(prompt, segment(base, topk_positions(profile, 3, exclude_final=True)))
        for state in states:
            exact = exact_value(params, prompt, state.prefix, env)
            group = partial_rollouts(params, state, m, env, make_stream(7, case, state.j))
            sigma = math.sqrt(max(exact * (1 - exact), 1e-12) / m)
            assert abs(group.value - exact) <= 4 * sigma + 1e-12


def test_fan_out_preserves_order_across_threads():
    def work(x):
        return x * x

    items = list(range(50))
    assert fan_out(work, items, workers=4) == [x * x for x in items]
    assert fan_out(work, items, workers=1) == [x * x for x in items]
