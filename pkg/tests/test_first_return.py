import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from app.core import ContractError, Prompt, make_stream
from app.envs import EnvConfig
from app.first_return import (
    EntropyProfile,
    build_states,
    entropy_profile,
    segment,
    select_base_trajectory,
    token_entropy,
    topk_positions,
)
from app.policy import TABULAR, distribution, generate, init_params

from conftest import make_group, make_trajectory, random_params


def test_entropy_identities():
    assert token_entropy([0.25] * 4) == pytest.approx(math.log(4), abs=1e-12)
    assert token_entropy([1.0, 0.0, 0.0, 0.0]) == 0.0
    assert token_entropy([0.5, 0.5, 0.0, 0.0]) == pytest.approx(math.log(2), abs=1e-12)


def test_entropy_of_a_distribution_object():
    params = init_params(TABULAR, 5, context_window=2)
    assert token_entropy(distribution(params, (1,))) == pytest.approx(math.log(5), abs=1e-12)


def test_entropy_bounded_over_random_policies():
    env = EnvConfig(family="parity_sum", vocab_size=4, prompt_len=6)
    prompt = Prompt(id="p0", tokens=(1, 0, 1, 1, 0, 0), env_tag="parity_sum")
    for seed in range(1000):
        params = random_params(TABULAR, 4, 2, seed, scale=4.0)
        traj = generate(params, prompt, env, make_stream(seed))
        profile = entropy_profile(params, traj, prompt)
        assert len(profile) == 6
        assert all(0.0 <= h <= math.log(4) for h in profile.values)


def test_profile_reproduces_recorded_entropies(copy_env, prompt):
    params = random_params(TABULAR, 2, 6, seed=3)
    traj = generate(params, prompt, copy_env, make_stream(7))
    profile = entropy_profile(params, traj, prompt)
    assert np.allclose(profile.values, traj.entropies, atol=1e-12, rtol=0)


def test_profile_rejects_foreign_prompt(copy_env, prompt):
    traj = make_trajectory([1, 0, 1], prompt_id="p9")
    with pytest.raises(ContractError):
        entropy_profile(init_params(TABULAR, 2, context_window=2), traj, prompt)


@pytest.mark.parametrize("values, k, expected", [
    ((0.1, 0.9, 0.5, 0.7), 2, (2, 4)),
    ((0.5, 0.5, 0.1), 1, (1,)),
    ((0.3, 0.2, 0.9), 10, (1, 2)),
])
def test_topk_positions(values, k, expected):
    assert topk_positions(EntropyProfile(values=values), k) == expected


def test_topk_excluding_final_position():
    profile = EntropyProfile(values=(0.1, 0.2, 0.9))
    assert topk_positions(profile, 1, exclude_final=True) == (2,)
    assert topk_positions(EntropyProfile(values=(0.4,)), 3, exclude_final=True) == ()


def test_topk_preconditions():
    with pytest.raises(ContractError):
        topk_positions(EntropyProfile(values=()), 1)
    with pytest.raises(ContractError):
        topk_positions(EntropyProfile(values=(0.1, 0.2)), 0)


@given(st.lists(st.sampled_from([0.1, 0.5, 0.9]), min_size=2, max_size=10), st.integers(1, 4), st.randoms())
@settings(max_examples=100, deadline=None)
def test_topk_picks_same_values_under_permutation(values, k, rnd):
    assume(k < len(values))
    chosen = topk_positions(EntropyProfile(values=tuple(values)), k)
    shuffled = list(values)
    rnd.shuffle(shuffled)
    other = topk_positions(EntropyProfile(values=tuple(shuffled)), k)
    assert sorted(values[p - 1] for p in chosen) == sorted(shuffled[p - 1] for p in other)
    assert list(chosen) == sorted(set(chosen))


def test_segment_into_blocks():
    traj = make_trajectory([1, 2, 3, 4, 5, 6])
    seg = segment(traj, (2, 4))
    assert [seg.block_tokens(n) for n in (1, 2, 3)] == [(1, 2), (3, 4), (5, 6)]
    whole = segment(make_trajectory([1, 2, 3, 4, 5]), ())
    assert whole.blocks == ((0, 5),) and whole.k_effective == 0


@pytest.mark.parametrize("positions", [(0,), (6,), (3, 3), (4, 2)])
def test_segment_rejects_bad_positions(positions):
    with pytest.raises(ContractError):
        segment(make_trajectory([1, 2, 3, 4, 5, 6]), positions)


@st.composite
def segmentation_cases(draw):
    length = draw(st.integers(1, 12))
    response = draw(st.lists(st.integers(0, 3), min_size=length, max_size=length))
    entropies = draw(st.lists(st.floats(0.0, 1.3), min_size=length, max_size=length))
    k = draw(st.integers(1, 6))
    return response, entropies, k


@given(segmentation_cases())
@settings(max_examples=1000, deadline=None)
def test_blocks_partition_and_states_chain(case):
    response, entropies, k = case
    prompt = Prompt(id="p0", tokens=(3, 1), env_tag="copy_seq")
    traj = make_trajectory(response, entropies=entropies)
    positions = topk_positions(EntropyProfile(values=tuple(entropies)), k, exclude_final=True)
    seg = segment(traj, positions)

    assert sum((seg.block_tokens(n) for n in range(1, len(seg.blocks) + 1)), ()) == tuple(response)
    assert all(seg.block_tokens(n) for n in range(1, seg.k_effective + 2))

    states = build_states(prompt, seg)
    assert len(states) == seg.k_effective + 1
    assert states[0].tokens == prompt.tokens
    for prev, nxt in zip(states, states[1:]):
        assert len(prev.tokens) < len(nxt.tokens) and nxt.tokens[:len(prev.tokens)] == prev.tokens
    for state, k_j in zip(states[1:], positions):
        assert len(state.tokens) == len(prompt.tokens) + k_j
        assert state.prefix_len == k_j


def test_base_trajectory_is_shortest_correct(prompt):
    group = make_group(prompt, [[1] * 4, [1] * 5, [1] * 3], [0, 1, 1])
    assert select_base_trajectory(group) is group.trajectories[2]
    tie = make_group(prompt, [[1] * 4, [0] * 4], [1, 0])
    assert select_base_trajectory(tie) is tie.trajectories[0]
    with pytest.raises(ContractError):
        select_base_trajectory(make_group(prompt, [[1], [0]], [0, 0]))
