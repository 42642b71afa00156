import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfmab.core import InstanceError
from mfmab.harness import (
    CSV_COLUMNS,
    ExperimentPlan,
    TrialRecord,
    fit_scaling_slope,
    plan_tasks,
    read_records,
    run_sweep,
    summarize,
    trial_seed,
    write_records,
)
from mfmab.instances import SIMULATION_PRIOR


def small_bai_plan(instances_dir, **kw):
    base = dict(
        mode="bai", instance=str(instances_dir / "table2.json"), trials=4, master_seed=11,
        grid=(0.2,), procedures=("C", "A"), prior=SIMULATION_PRIOR,
    )
    base.update(kw)
    return ExperimentPlan(**base)


@pytest.fixture
def instances_dir(request):
    return request.config.rootpath / "instances"


def test_csv_columns_order():
    assert CSV_COLUMNS == (
        "mode", "procedure", "grid_param_name", "grid_param_value", "trial", "seed",
        "chosen_arm", "success", "total_cost", "rounds", "pseudo_regret", "wall_ms",
    )


record_strategy = st.builds(
    TrialRecord,
    mode=st.sampled_from(["bai", "regret"]),
    procedure=st.sampled_from(["A", "B", "C", ""]),
    grid_param_name=st.sampled_from(["delta", "budget"]),
    grid_param_value=st.floats(1e-6, 1e9, allow_nan=False),
    trial=st.integers(0, 10**6),
    seed=st.integers(0, 2**64 - 1),
    chosen_arm=st.one_of(st.none(), st.integers(0, 20)),
    success=st.one_of(st.none(), st.booleans()),
    total_cost=st.one_of(st.none(), st.floats(0, 1e12, allow_nan=False)),
    rounds=st.one_of(st.none(), st.integers(0, 10**9)),
    pseudo_regret=st.one_of(st.none(), st.floats(-1e9, 1e9, allow_nan=False)),
    wall_ms=st.one_of(st.none(), st.floats(0, 1e6, allow_nan=False)),
)


@settings(max_examples=200)
@given(records=st.lists(record_strategy, min_size=1, max_size=10))
def test_csv_round_trip(records):
    assert read_records(write_records(records)) == records


def test_trial_seed_is_stable_and_distinct():
    seeds = {trial_seed(5, g, i) for g in range(4) for i in range(250)}
    assert len(seeds) == 1000
    assert trial_seed(5, 1, 2) == trial_seed(5, 1, 2)
    assert all(0 <= s < 2**64 for s in seeds)


def test_procedures_share_seeds(instances_dir):
    tasks = plan_tasks(small_bai_plan(instances_dir))
    by_proc = {}
    for t in tasks:
        by_proc.setdefault(t.procedure, []).append(t.seed)
    assert by_proc["A"] == by_proc["C"]


def test_summary_of_single_trial(instances_dir):
    records, summary = run_sweep(small_bai_plan(instances_dir, trials=1, procedures=("C",)))
    assert len(summary) == 1
    s = summary[0]
    assert s.mean_cost == records[0].total_cost and s.std_cost == 0.0
    assert s.success_rate == float(records[0].success)


def test_summary_statistics():
    recs = [TrialRecord("regret", "", "budget", 100.0, i, 0, total_cost=c, pseudo_regret=r)
            for i, (c, r) in enumerate([(99.0, 1.0), (100.0, 3.0), (98.5, 8.0)])]
    (s,) = summarize(recs)
    assert s.mean_regret == pytest.approx(4.0, rel=1e-12)
    assert s.std_regret == pytest.approx(math.sqrt(((1 - 4) ** 2 + (3 - 4) ** 2 + (8 - 4) ** 2) / 2), rel=1e-12)
    assert s.std_cost == pytest.approx(np.std([99.0, 100.0, 98.5], ddof=1), rel=1e-12)


def test_sweep_is_byte_identical(tmp_path, instances_dir):
    plan = small_bai_plan(instances_dir)
    run_sweep(plan, tmp_path / "a")
    run_sweep(plan, tmp_path / "b")
    run_sweep(ExperimentPlan(**{**plan.__dict__, "workers": 3}), tmp_path / "c")
    for name in ("trials.csv", "summary.csv"):
        a = (tmp_path / "a" / name).read_bytes()
        assert a == (tmp_path / "b" / name).read_bytes() == (tmp_path / "c" / name).read_bytes()


def test_regret_sweep_records(instances_dir):
    plan = ExperimentPlan(mode="regret", instance=str(instances_dir / "two_arm.json"), trials=3,
                          grid=(500.0, 2000.0))
    records, summary = run_sweep(plan)
    assert len(records) == 6 and len(summary) == 2
    assert all(r.pseudo_regret is not None and r.success is None for r in records)
    assert all(r.total_cost <= r.grid_param_value for r in records)


def test_plan_from_file_resolves_instance(tmp_path, instances_dir):
    plan = ExperimentPlan.from_file(instances_dir / "figure1a_plan.json")
    assert plan.grid == (0.05, 0.1, 0.15, 0.2, 0.25)
    assert plan.procedures == ("A", "B") and plan.trials == 100
    assert plan.prior == SIMULATION_PRIOR
    assert (instances_dir / "table2.json").samefile(plan.instance)


def test_plan_rejects_bad_input(tmp_path):
    with pytest.raises(ValueError):
        ExperimentPlan(mode="bai", instance="x.json", grid=())
    with pytest.raises(ValueError):
        ExperimentPlan(mode="oops", instance="x.json", grid=(0.1,))
    bad = tmp_path / "plan.json"
    bad.write_text(json.dumps({"mode": "bai", "deltas": [0.1]}))
    with pytest.raises(InstanceError):
        ExperimentPlan.from_file(bad)


def test_unreadable_instance_reports_path(tmp_path):
    inst = tmp_path / "broken.json"
    inst.write_text('{"costs": [1.0],\n "error_bounds": [0.0], "means": ')
    plan = ExperimentPlan(mode="bai", instance=str(inst), grid=(0.1,), procedures=("C",))
    with pytest.raises(InstanceError) as err:
        run_sweep(plan)
    assert str(inst) in str(err.value) and ":2:" in str(err.value)


# ---------------------------------------------------------------------------
# slope fits


def test_slope_exact_two_thirds():
    budgets = np.logspace(3, 5, 5)
    fit = fit_scaling_slope(budgets, 3.7 * budgets ** (2 / 3))
    assert abs(fit.slope - 2 / 3) < 1e-9
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def test_slope_linear():
    budgets = np.logspace(2, 6, 7)
    assert abs(fit_scaling_slope(budgets, 0.01 * budgets).slope - 1.0) < 1e-9


def test_slope_drops_nonpositive_points(caplog):
    budgets = np.logspace(3, 5, 5)
    regrets = budgets ** (2 / 3)
    regrets[1] = 0.0
    fit = fit_scaling_slope(budgets, regrets)
    assert fit.points == 4 and abs(fit.slope - 2 / 3) < 1e-9
    assert "dropping 1" in caplog.text


def test_slope_needs_three_points():
    with pytest.raises(ValueError):
        fit_scaling_slope([10.0, 100.0, 1000.0], [1.0, -1.0, 5.0])
