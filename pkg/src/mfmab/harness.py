"""Monte-Carlo experiment orchestration and CSV persistence.

Trial ``i`` at grid point ``g`` is seeded from ``SeedSequence([master_seed,
g, i])`` so results do not depend on execution order or on the number of
worker processes. Procedures at the same grid point share seeds.
"""

from __future__ import annotations

import csv
import io
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import stats

from .bai import BaiConfig, run_bai
from .core import InstanceError, InstanceSpec, PriorMeans, canonical, load_instance, load_json
from .regret import RegretConfig, run_regret

log = logging.getLogger(__name__)

MODES = ("bai", "regret", "bounds", "validate")

CSV_COLUMNS = (
    "mode", "procedure", "grid_param_name", "grid_param_value", "trial", "seed",
    "chosen_arm", "success", "total_cost", "rounds", "pseudo_regret", "wall_ms",
)


@dataclass(frozen=True)
class ExperimentPlan:
    mode: str
    instance: str
    trials: int = 100
    master_seed: int = 0
    grid: tuple[float, ...] = ()
    procedures: tuple[str, ...] = ("A",)
    prior: Optional[PriorMeans] = None
    L: Optional[float] = None
    epsilon: Optional[float] = None
    distribution: Optional[str] = None
    workers: int = 1
    timing: bool = False
    allow_inconsistent: bool = False
    output: Optional[str] = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.mode in ("bai", "regret"):
            if not self.grid:
                raise ValueError("grid must be non-empty")
            if any(not v > 0 for v in self.grid):
                raise ValueError("grid values must be positive")

    @property
    def grid_param(self) -> str:
        return "delta" if self.mode == "bai" else "budget"

    @classmethod
    def from_file(cls, path) -> "ExperimentPlan":
        path = Path(path)
        data = load_json(path)
        mode = data.get("mode")
        instance = data.get("instance")
        if instance is None:
            raise InstanceError(f"{path}: plan needs an 'instance' path")
        if not Path(instance).is_absolute():
            instance = str(path.parent / instance)
        grid = data.get("deltas") if mode == "bai" else data.get("budgets")
        if grid is None:
            grid = data.get("grid", [])
        prior = None
        if "mu1_tilde" in data or "mu2_tilde" in data:
            prior = PriorMeans(data["mu1_tilde"], data["mu2_tilde"])
        procs = data.get("procedures", ["A"])
        if isinstance(procs, str):
            procs = [procs]
        return cls(
            mode=mode,
            instance=instance,
            trials=int(data.get("trials", 100)),
            master_seed=int(data.get("seed", 0)),
            grid=tuple(float(v) for v in grid),
            procedures=tuple(p.upper() for p in procs),
            prior=prior,
            L=data.get("L"),
            epsilon=data.get("epsilon"),
            distribution=data.get("distribution"),
            workers=int(data.get("workers", 1)),
            timing=bool(data.get("timing", False)),
            allow_inconsistent=bool(data.get("allow_inconsistent", False)),
        )


@dataclass
class TrialRecord:
    mode: str
    procedure: str
    grid_param_name: str
    grid_param_value: float
    trial: int
    seed: int
    chosen_arm: Optional[int] = None
    success: Optional[bool] = None
    total_cost: Optional[float] = None
    rounds: Optional[int] = None
    pseudo_regret: Optional[float] = None
    wall_ms: Optional[float] = None


@dataclass
class SummaryRecord:
    mode: str
    procedure: str
    grid_param_name: str
    grid_param_value: float
    trials: int
    mean_cost: float
    std_cost: float
    success_rate: Optional[float] = None
    mean_regret: Optional[float] = None
    std_regret: Optional[float] = None


def trial_seed(master_seed: int, grid_index: int, trial: int) -> int:
    """Stable 64-bit seed for one trial."""
    words = np.random.SeedSequence([master_seed, grid_index, trial]).generate_state(2, dtype=np.uint32)
    return int(words[0]) | (int(words[1]) << 32)


# ---------------------------------------------------------------------------
# CSV


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_records(records: Iterable, path=None, columns: Sequence[str] = CSV_COLUMNS) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for rec in records:
        row = asdict(rec)
        writer.writerow([_fmt(row.get(c)) for c in columns])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


_CONVERTERS = {
    "trial": int, "seed": int, "chosen_arm": int, "rounds": int,
    "grid_param_value": float, "total_cost": float, "pseudo_regret": float, "wall_ms": float,
    "success": lambda s: s == "1",
}


def read_records(source) -> list[TrialRecord]:
    """Parse a trial CSV from a path or from CSV text."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        text = Path(source).read_text()
    else:
        text = source
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        kw = {}
        for name, raw in row.items():
            if name not in _CONVERTERS:
                kw[name] = raw
            else:
                kw[name] = None if raw == "" else _CONVERTERS[name](raw)
        out.append(TrialRecord(**kw))
    return out


# ---------------------------------------------------------------------------
# running trials


@dataclass(frozen=True)
class _Task:
    mode: str
    procedure: str
    grid_index: int
    value: float
    trial: int
    seed: int


def _run_task(spec: InstanceSpec, plan: ExperimentPlan, task: _Task) -> TrialRecord:
    start = time.perf_counter()
    rec = TrialRecord(plan.mode, task.procedure, plan.grid_param, task.value, task.trial, task.seed)
    if plan.mode == "bai":
        L = plan.L if plan.L is not None else 4.0 * spec.num_arms * spec.num_fidelities
        cfg = BaiConfig(task.value, L, task.procedure, plan.prior)
        res = run_bai(spec, cfg, task.seed)
        rec.chosen_arm = res.chosen_arm
        rec.success = res.chosen_arm == 0
        rec.total_cost = res.total_cost
        rec.rounds = res.rounds
    else:
        res = run_regret(spec, RegretConfig(task.value, plan.epsilon), task.seed, record=False)
        rec.total_cost = res.total_cost
        rec.rounds = len(res.trace)
        rec.pseudo_regret = res.pseudo_regret
        rec.chosen_arm = res.final_candidates[0] if len(res.final_candidates) == 1 else None
    if plan.timing:
        rec.wall_ms = (time.perf_counter() - start) * 1e3
    return rec


def _run_chunk(spec: InstanceSpec, plan: ExperimentPlan, tasks: list[_Task]) -> list[TrialRecord]:
    return [_run_task(spec, plan, t) for t in tasks]


def plan_tasks(plan: ExperimentPlan) -> list[_Task]:
    procs = plan.procedures if plan.mode == "bai" else ("",)
    tasks = []
    for proc in procs:
        for g, value in enumerate(plan.grid):
            for i in range(plan.trials):
                tasks.append(_Task(plan.mode, proc, g, value, i, trial_seed(plan.master_seed, g, i)))
    return tasks


def load_plan_instance(plan: ExperimentPlan) -> InstanceSpec:
    spec = load_instance(plan.instance)
    if plan.distribution is not None:
        spec = spec.with_distribution(plan.distribution)
    return canonical(spec, allow_inconsistent=plan.allow_inconsistent)


def run_trials(plan: ExperimentPlan, spec: Optional[InstanceSpec] = None) -> list[TrialRecord]:
    """All trial records of a plan, in (procedure, grid, trial) order."""
    if spec is None:
        spec = load_plan_instance(plan)
    tasks = plan_tasks(plan)
    if plan.workers <= 1:
        return _run_chunk(spec, plan, tasks)
    n = plan.workers
    chunks = [tasks[i::n] for i in range(n)]
    with ProcessPoolExecutor(max_workers=n) as pool:
        parts = list(pool.map(_run_chunk, [spec] * n, [plan] * n, chunks))
    by_key = {(r.procedure, r.grid_param_value, r.trial): r for part in parts for r in part}
    return [by_key[(t.procedure, t.value, t.trial)] for t in tasks]


def _std(values: np.ndarray) -> float:
    return float(np.std(values, ddof=1)) if values.size > 1 else 0.0


def summarize(records: Sequence[TrialRecord]) -> list[SummaryRecord]:
    groups: dict[tuple, list[TrialRecord]] = {}
    for r in records:
        groups.setdefault((r.mode, r.procedure, r.grid_param_name, r.grid_param_value), []).append(r)
    out = []
    for (mode, proc, name, value), recs in groups.items():
        costs = np.array([r.total_cost for r in recs], dtype=float)
        s = SummaryRecord(mode, proc, name, value, len(recs), float(costs.mean()), _std(costs))
        if mode == "bai":
            s.success_rate = float(np.mean([bool(r.success) for r in recs]))
        else:
            reg = np.array([r.pseudo_regret for r in recs], dtype=float)
            s.mean_regret, s.std_regret = float(reg.mean()), _std(reg)
        out.append(s)
    return out


SUMMARY_COLUMNS = tuple(f.name for f in fields(SummaryRecord))


def run_sweep(plan: ExperimentPlan, out_dir=None,
              spec: Optional[InstanceSpec] = None) -> tuple[list[TrialRecord], list[SummaryRecord]]:
    records = run_trials(plan, spec)
    summary = summarize(records)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_records(records, out_dir / "trials.csv")
        write_records(summary, out_dir / "summary.csv", SUMMARY_COLUMNS)
    return records, summary


# ---------------------------------------------------------------------------
# scaling fits


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float
    points: int


def fit_scaling_slope(budgets, mean_regrets) -> SlopeFit:
    """Least-squares slope of log(mean regret) against log(budget)."""
    x = np.asarray(budgets, dtype=float)
    y = np.asarray(mean_regrets, dtype=float)
    keep = y > 0
    if not np.all(keep):
        log.warning("dropping %d grid points with non-positive mean regret", int((~keep).sum()))
    x, y = x[keep], y[keep]
    if np.unique(x).size < 3:
        raise ValueError("need at least three distinct budgets with positive regret")
    fit = stats.linregress(np.log(x), np.log(y))
    return SlopeFit(float(fit.slope), float(fit.intercept), float(fit.rvalue**2), int(x.size))


def fit_records(records: Sequence[TrialRecord]) -> SlopeFit:
    summary = [s for s in summarize(records) if s.mode == "regret"]
    return fit_scaling_slope([s.grid_param_value for s in summary], [s.mean_regret for s in summary])
