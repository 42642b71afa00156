import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfmab.core import InstanceSpec
from mfmab.env import EnvState, make_rng
from mfmab.instances import TABLE2


def test_deterministic_pull_returns_mean_and_charges_cost(table2):
    env = EnvState(table2.with_distribution("deterministic"), seed=0)
    assert env.pull(0, 2) == 0.90
    assert env.spent == pytest.approx(1.2, rel=0, abs=0)
    assert env.counts[0, 2] == 1


def test_degenerate_bernoulli_always_succeeds():
    spec = InstanceSpec.from_arrays([1.0], [0.0], [[1.0], [0.0]])
    env = EnvState(spec, seed=5)
    assert all(env.pull(0, 0) == 1.0 for _ in range(1000))
    assert all(env.pull(1, 0) == 0.0 for _ in range(1000))


def test_bernoulli_law_of_large_numbers(table2):
    env = EnvState(table2, seed=123, record=False)
    obs = env.pull_many(np.full(100_000, 4), 0)
    # std of the sample mean is sqrt(0.21 / 1e5) ~ 0.00145; 0.01 is ~7 sigma
    assert abs(obs.mean() - 0.30) <= 0.01
    assert set(np.unique(obs)) <= {0.0, 1.0}


def test_out_of_range_pull(table2):
    env = EnvState(table2, seed=0)
    with pytest.raises(IndexError):
        env.pull(5, 0)
    with pytest.raises(IndexError):
        env.pull(0, 3)
    with pytest.raises(IndexError):
        env.pull_many([0, 7], 1)


def test_same_seed_same_observations(table2):
    actions = [(k % 5, k % 3) for k in range(500)]
    a = EnvState(table2, seed=99)
    b = EnvState(table2, seed=99)
    xa = [a.pull(k, m) for k, m in actions]
    xb = [b.pull(k, m) for k, m in actions]
    assert xa == xb
    c = EnvState(table2, seed=100)
    assert [c.pull(k, m) for k, m in actions] != xa


def test_pull_many_matches_sequential_pulls(table2):
    arms = np.array([0, 3, 3, 1, 4, 2] * 50)
    a = EnvState(table2, seed=7)
    b = EnvState(table2, seed=7)
    seq = np.array([a.pull(int(k), 1) for k in arms])
    np.testing.assert_array_equal(b.pull_many(arms, 1), seq)
    np.testing.assert_array_equal(a.counts, b.counts)
    np.testing.assert_array_equal(a.pull_log, b.pull_log)


def test_make_rng_accepts_seed_sequence():
    ss = np.random.SeedSequence(42)
    assert make_rng(ss).random() == make_rng(np.random.SeedSequence(42)).random()


@pytest.mark.parametrize(
    "costs, spent_pulls, fidelity, expected",
    [
        # spent 9.0 then a 1.2 pull would overshoot 10
        ((1.0, 1.2), (9, 0), 1, False),
        # 4 x 1.0 + 4 x 1.2 = 8.8 spent, so one more 1.2 pull lands on 10
        ((1.0, 1.2), (4, 4), 1, True),
    ],
)
def test_can_afford_boundary(costs, spent_pulls, fidelity, expected):
    spec = InstanceSpec.from_arrays(costs, (0.5, 0.0), [[0.9, 0.9], [0.5, 0.5]])
    env = EnvState(spec.with_distribution("deterministic"), seed=0)
    for m, n in enumerate(spent_pulls):
        for _ in range(n):
            env.pull(0, m)
    assert env.can_afford(10.0, fidelity) is expected


def test_can_afford_exact_boundary_included():
    # 8.8 spent in one pull, then exactly 1.2 left
    spec = InstanceSpec.from_arrays((1.2, 8.8), (0.5, 0.0), [[0.9, 0.9], [0.5, 0.5]])
    env = EnvState(spec.with_distribution("deterministic"), seed=0)
    env.pull(0, 1)
    assert env.spent == 8.8
    assert env.can_afford(10.0, 0)
    env.pull(0, 0)
    assert not env.can_afford(10.0, 0)


def test_fresh_env_remaining_budget(table2):
    env = EnvState(table2, seed=0)
    assert env.remaining_budget(10.0) == 10.0
    assert env.num_pulls == 0 and len(env.pull_log) == 0


@settings(max_examples=60)
@given(
    seed=st.integers(0, 2**32 - 1),
    budget=st.floats(1.0, 60.0),
    script=st.lists(st.tuples(st.integers(0, 4), st.integers(0, 2)), min_size=1, max_size=80),
)
def test_ledger_invariants(seed, budget, script):
    table2 = TABLE2
    env = EnvState(table2, seed=seed)
    for k, m in script:
        if env.can_afford(budget, m):
            env.pull(k, m)
        else:
            n = env.pull_many(np.full(3, k), m, budget=budget).size
            assert n == 0
    log = env.pull_log
    assert env.spent <= budget
    assert env.num_pulls == len(log) == env.log_length
    assert env.spent == pytest.approx(float(np.sum(table2.lam[log["fidelity"]])), rel=1e-12)
    np.testing.assert_array_equal(log["t"], np.arange(1, len(log) + 1))


@settings(max_examples=100)
@given(budget=st.floats(0.0, 500.0), m=st.integers(0, 2), prior=st.integers(0, 30))
def test_affordable_pulls_is_maximal(budget, m, prior):
    table2 = TABLE2
    env = EnvState(table2.with_distribution("deterministic"), seed=0, record=False)
    env.pull_many(np.zeros(prior, dtype=np.int64), 1)
    n = env.affordable_pulls(budget, m)
    lam = table2.lam
    base = env.counts.sum(axis=0).astype(float)

    def cost(extra):
        b = base.copy()
        b[m] += extra
        return float(b @ lam)

    if cost(0) > budget:
        assert n == 0
    else:
        assert cost(n) <= budget
        assert cost(n + 1) > budget
