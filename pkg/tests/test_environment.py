import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rcmab.environment import (EnvironmentSpec, make_grouped_env, optimal_arm_entropy, sample_reward,
                               sample_rewards, sample_state, sample_states)


def test_groups16_identity_optimal():
    env = make_grouped_env(16, 16, 16, seed=3)
    assert env.optimal_action.tolist() == list(range(16))
    assert len(set(env.optimal_action.tolist())) == 16


def test_groups2_two_classes_of_eight():
    env = make_grouped_env(16, 16, 2, seed=7)
    counts = np.bincount(env.optimal_action, minlength=16)
    assert sorted(counts[counts > 0].tolist()) == [8, 8]
    assert env.optimal_action.tolist() == [0] * 8 + [1] * 8


def test_smallest_instance():
    env = make_grouped_env(2, 2, 2, seed=0)
    assert env.optimal_action.tolist() == [0, 1]
    assert np.all(np.diag(env.mean_rewards) == 0.8)


def test_groups8_contiguous_blocks():
    env = make_grouped_env(16, 16, 8, seed=1)
    assert env.optimal_action.tolist() == [i // 2 for i in range(16)]


@pytest.mark.parametrize("args", [(16, 16, 3), (16, 4, 8), (6, 2, 4)])
def test_grouped_rejects(args):
    with pytest.raises(ValueError):
        make_grouped_env(*args, seed=0)


def test_regeneration_bit_identical():
    a = make_grouped_env(16, 16, 8, seed=11)
    b = make_grouped_env(16, 16, 8, seed=11)
    assert a.mean_rewards.tobytes() == b.mean_rewards.tobytes()
    assert a.state_dist.tobytes() == b.state_dist.tobytes()
    assert not np.array_equal(a.mean_rewards, make_grouped_env(16, 16, 8, seed=12).mean_rewards)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([(16, 16, 16), (16, 16, 8), (16, 16, 2), (4, 4, 4), (4, 2, 2), (8, 4, 1)]),
       st.integers(0, 2**32))
def test_grouped_properties(shape, seed):
    s, k, g = shape
    env = make_grouped_env(s, k, g, seed)
    assert optimal_arm_entropy(env) == np.log2(g)
    assert np.allclose(env.state_dist, 1 / s)
    if k > 1:
        assert env.min_gap >= 0.05
    assert len(set(env.optimal_action.tolist())) == g


def test_entropy_scenarios_exact():
    assert optimal_arm_entropy(make_grouped_env(16, 16, 16, 0)) == 4.0
    assert optimal_arm_entropy(make_grouped_env(16, 16, 8, 0)) == 3.0
    assert optimal_arm_entropy(make_grouped_env(16, 16, 2, 0)) == 1.0


def test_entropy_single_optimal_arm():
    mu = np.array([[0.9, 0.1], [0.7, 0.2], [0.6, 0.5]])
    env = EnvironmentSpec(np.full(3, 1 / 3), mu)
    assert optimal_arm_entropy(env) == 0.0


def test_spec_validation():
    with pytest.raises(ValueError):
        EnvironmentSpec([0.5, 0.6], [[0.1, 0.2], [0.3, 0.4]])
    with pytest.raises(ValueError):
        EnvironmentSpec([0.5, 0.5], [[0.1, 1.2], [0.3, 0.4]])
    with pytest.raises(ValueError):
        EnvironmentSpec([0.5, 0.5], [[0.4, 0.4], [0.3, 0.4]])
    with pytest.raises(ValueError):
        EnvironmentSpec([1.0], [[0.4, 0.2], [0.3, 0.4]])
    # ties among non-optimal arms are fine
    EnvironmentSpec([1.0], [[0.9, 0.2, 0.2]])


def test_spec_is_read_only():
    env = make_grouped_env(2, 2, 2, 0)
    with pytest.raises(ValueError):
        env.mean_rewards[0, 0] = 0.1


def test_save_load_roundtrip(tmp_path):
    env = make_grouped_env(16, 16, 8, seed=5)
    path = tmp_path / "env.json"
    env.save(path)
    back = EnvironmentSpec.load(path)
    assert back.mean_rewards.tobytes() == env.mean_rewards.tobytes()
    assert back.seed == 5
    assert back.optimal_action.tolist() == env.optimal_action.tolist()


def test_from_dict_rejects_inconsistent_optimal():
    d = make_grouped_env(2, 2, 2, 0).to_dict()
    d["optimal_action"] = [1, 0]
    with pytest.raises(ValueError):
        EnvironmentSpec.from_dict(d)


def test_sample_state_degenerate():
    env = EnvironmentSpec([1.0, 0.0], [[0.5, 0.1], [0.2, 0.3]])
    rng = np.random.default_rng(0)
    assert all(sample_state(env, rng) == 0 for _ in range(200))
    assert np.all(sample_states(env, 10_000, rng) == 0)


def test_sample_state_uniform_frequencies():
    env = make_grouped_env(16, 16, 16, 0)
    freq = np.bincount(sample_states(env, 10**6, np.random.default_rng(1)), minlength=16) / 10**6
    assert np.all(np.abs(freq - 0.0625) <= 0.002)


def test_sample_state_determinism():
    env = EnvironmentSpec([0.5, 0.5], [[0.5, 0.1], [0.2, 0.3]])
    a = sample_states(env, 100, np.random.default_rng(42))
    b = sample_states(env, 100, np.random.default_rng(42))
    assert np.array_equal(a, b)


def test_sample_reward_extremes_and_mean():
    env = EnvironmentSpec([1.0], [[1.0, 0.0, 0.8]])
    rng = np.random.default_rng(2)
    assert all(sample_reward(env, 0, 0, rng) == 1 for _ in range(100))
    assert all(sample_reward(env, 0, 1, rng) == 0 for _ in range(100))
    draws = sample_rewards(env, np.zeros(10**5, int), np.full(10**5, 2), rng)
    assert set(np.unique(draws)) <= {0, 1}
    assert abs(draws.mean() - 0.8) <= 0.006


@pytest.mark.parametrize("s,a", [(1, 0), (0, 3), (-1, 0)])
def test_sample_reward_index_errors(s, a):
    env = EnvironmentSpec([1.0], [[1.0, 0.0, 0.8]])
    with pytest.raises(IndexError):
        sample_reward(env, s, a, np.random.default_rng(0))
