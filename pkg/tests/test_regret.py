import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfmab.core import InstanceSpec
from mfmab.instances import TABLE2, two_arm
from mfmab.regret import (
    RegretConfig,
    default_epsilon,
    eliminate,
    phase_target,
    pseudo_regret_from_log,
    run_regret,
)

from conftest import random_valid_instance


@pytest.mark.parametrize("p, expected", [(0, 10), (1, 31)])
def test_phase_target_examples(p, expected):
    assert phase_target(p, 10_000, 1.2) == expected
    assert math.ceil(4**p * math.log(10_000 / (4**p * 1.2))) == expected


def test_phase_target_nonpositive_log_is_zero():
    assert phase_target(0, 1.2, 1.2) == 0
    assert phase_target(5, 100.0, 1.2) == 0
    assert phase_target(0, math.e, 1.0) == 1


def test_eliminate_examples():
    mu = [0.9, 0.8, 0.1]
    assert eliminate([0, 1, 2], mu, 0) == [0, 1, 2]
    assert eliminate([0, 1, 2], mu, 3) == [0, 1]
    assert eliminate([2], mu, 9) == [2]


def test_eliminate_margin_is_strict():
    # 0.5 + 0.25 == 0.75 exactly: not strictly above the leader, so dropped
    assert eliminate([0, 1], [0.75, 0.5], 3) == [0]


@settings(max_examples=300)
@given(
    means=st.lists(st.floats(0.0, 1.0), min_size=1, max_size=12),
    p=st.integers(0, 12),
    data=st.data(),
)
def test_eliminate_keeps_maximizer_and_nests(means, p, data):
    cands = sorted(data.draw(st.sets(st.integers(0, len(means) - 1), min_size=1)))
    out = eliminate(cands, means, p)
    assert set(out) <= set(cands)
    best = max(means[k] for k in cands)
    assert any(means[k] == best for k in out)


def test_default_epsilon():
    assert default_epsilon(5, 1e4) == pytest.approx((5 * math.log(1e4) / 1e4) ** (1 / 3), rel=1e-12)


def test_pseudo_regret_arithmetic():
    assert pseudo_regret_from_log(TABLE2, 1.2, [0]) == pytest.approx(1.2 * 0.9 - 0.9, rel=1e-12)
    assert pseudo_regret_from_log(TABLE2, 1.2, [0]) == pytest.approx(0.18, rel=1e-12)
    assert pseudo_regret_from_log(TABLE2, 10.0, [0] * 10) == pytest.approx(0.0, abs=1e-12)


def test_tiny_budget_exploits_once():
    res = run_regret(TABLE2, RegretConfig(1.2, epsilon=0.5), seed=0)
    assert res.trace == [] and res.num_pulls == 1
    assert res.pull_log["fidelity"][0] == 0
    assert res.pseudo_regret == pytest.approx(0.18, rel=1e-12)


def test_deterministic_walk_eliminates_at_phase_two():
    spec = InstanceSpec.from_arrays([1.0, 1.2], [0.3, 0.0], [[0.8, 0.9], [0.2, 0.1]]).with_distribution("deterministic")
    res = run_regret(spec, RegretConfig(10_000.0, epsilon=0.1), seed=0)
    assert math.log2(2 / 0.1) == pytest.approx(4.3219, abs=1e-4)
    assert [tr.survivors for tr in res.trace] == [[0, 1], [0, 1], [0]]
    assert [tr.target for tr in res.trace] == [phase_target(p, 10_000.0, 1.2) for p in range(3)]
    assert res.final_candidates == [0]
    log = res.pull_log
    exploit = log[log["fidelity"] == 0]
    assert exploit.size > 0 and np.all(exploit["arm"] == 0)
    assert np.all(log["fidelity"][: log.size - exploit.size] == 1)
    assert 10_000.0 - res.total_cost < 1.0


def test_truncated_exploration_is_flagged():
    # phase 0 needs ceil(ln(12 / 1.2)) = 3 pulls per arm: 5 * 3 * 1.2 = 18 > 12
    res = run_regret(TABLE2, RegretConfig(12.0), seed=1)
    assert res.exploration_truncated
    assert res.total_cost <= 12.0


def test_budget_below_top_cost_rejected():
    with pytest.raises(ValueError):
        run_regret(TABLE2, RegretConfig(1.0), seed=0)


def test_same_seed_same_result():
    a = run_regret(two_arm(), RegretConfig(5000.0), seed=3)
    b = run_regret(two_arm(), RegretConfig(5000.0), seed=3)
    assert a.pseudo_regret == b.pseudo_regret
    np.testing.assert_array_equal(a.pull_log, b.pull_log)


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), log_budget=st.floats(0.5, 4.5), eps=st.one_of(st.none(), st.floats(0.01, 1.0)))
def test_budget_ledger_and_regret_bookkeeping(seed, log_budget, eps):
    spec = random_valid_instance(np.random.default_rng(seed))
    budget = max(10.0**log_budget, float(spec.lam[-1]))
    res = run_regret(spec, RegretConfig(budget, eps), seed=seed)
    log = res.pull_log
    lam = spec.lam
    spent = float(np.sum(lam[log["fidelity"]]))
    assert spent == pytest.approx(res.total_cost, rel=1e-12)
    assert res.total_cost <= budget
    if not res.exploration_truncated:
        assert budget - res.total_cost < lam[0]
    mu = spec.true_means
    recomputed = budget / lam[0] * mu[0] - float(np.sum(mu[log["arm"]]))
    assert res.pseudo_regret == pytest.approx(recomputed, rel=1e-9, abs=1e-9)
    prev = set(range(spec.num_arms))
    for tr in res.trace:
        assert set(tr.survivors) <= set(tr.means) <= prev
        best = max(tr.means.values())
        assert any(tr.means[k] == best for k in tr.survivors)
        prev = set(tr.survivors)
    assert set(res.final_candidates) <= prev
