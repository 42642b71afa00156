"""Budgeted regret minimization by phased elimination.

Exploration happens only at the highest fidelity: in phase ``p`` every
surviving arm is topped up to a cumulative pull target and arms whose
empirical mean trails the leader by at least ``2^(1-p)`` are dropped.
Once a single arm remains (or the phase budget ``log2(2/eps)`` runs out)
the survivors are pulled in turn at the cheapest fidelity until no pull is
affordable.

Regret charges every time slot the gap between the optimal arm's true mean
and the pulled arm's true mean, against ``budget / cost[0]`` slots of the
optimal policy; the fidelity only changes cost and observation noise.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import InstanceSpec
from .env import EnvState, make_rng

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RegretConfig:
    budget: float
    epsilon: Optional[float] = None

    def __post_init__(self):
        if not self.budget > 0:
            raise ValueError("budget must be positive")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    def resolved_epsilon(self, num_arms: int) -> float:
        if self.epsilon is not None:
            eps = self.epsilon
        else:
            eps = default_epsilon(num_arms, self.budget)
        if eps <= math.e / self.budget:
            log.warning("epsilon=%g is not above e/budget=%g", eps, math.e / self.budget)
        return eps


def default_epsilon(num_arms: int, budget: float) -> float:
    """(K log budget / budget)^(1/3)."""
    return (num_arms * math.log(budget) / budget) ** (1.0 / 3.0)


@dataclass
class RegretRunState:
    phase: int
    candidates: list[int]
    top_counts: np.ndarray
    top_sums: np.ndarray
    rotation: int = 0

    @property
    def top_means(self) -> np.ndarray:
        return self.top_sums / np.maximum(self.top_counts, 1)


@dataclass
class PhaseTrace:
    phase: int
    target: int
    means: dict[int, float]
    survivors: list[int]


@dataclass
class RegretResult:
    pseudo_regret: float
    realized_regret: float
    num_pulls: int
    total_cost: float
    final_candidates: list[int]
    trace: list[PhaseTrace] = field(default_factory=list)
    exploration_truncated: bool = False
    pull_log: Optional[np.ndarray] = field(default=None, repr=False)


def phase_target(p: int, budget: float, top_cost: float) -> int:
    """Cumulative highest-fidelity pulls per arm by the end of phase ``p``."""
    scale = 4.0**p
    value = math.log(budget / (scale * top_cost))
    if value <= 0:
        return 0
    return math.ceil(scale * value)


def eliminate(candidates, means, p: int) -> list[int]:
    """Keep arms within ``2^(1-p)`` (exclusive) of the best empirical mean."""
    means = np.asarray(means, dtype=float)
    cands = list(candidates)
    best = max(means[k] for k in cands)
    margin = 2.0 ** (1 - p)
    return [k for k in cands if means[k] + margin > best]


def pseudo_regret_from_log(spec: InstanceSpec, budget: float, arms) -> float:
    mu = spec.true_means
    return budget / spec.lam[0] * mu[0] - float(np.sum(mu[np.asarray(arms, dtype=np.int64)]))


def run_regret(spec: InstanceSpec, cfg: RegretConfig, seed, record: bool = True) -> RegretResult:
    K, M = spec.num_arms, spec.num_fidelities
    lam, mu_true = spec.lam, spec.true_means
    top = M - 1
    budget = cfg.budget
    if budget < lam[top]:
        raise ValueError(f"budget {budget} cannot afford a single highest-fidelity pull ({lam[top]})")
    eps = cfg.resolved_epsilon(K)

    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
    obs_ss, reward_ss = ss.spawn(2)
    env = EnvState(spec, obs_ss, record=record)
    reward_rng = make_rng(reward_ss)

    state = RegretRunState(0, list(range(K)), np.zeros(K, dtype=np.int64), np.zeros(K))
    earned = 0.0
    realized = 0.0
    trace: list[PhaseTrace] = []
    truncated = False

    def collect(arms: np.ndarray) -> None:
        nonlocal earned, realized
        earned += float(np.sum(mu_true[arms]))
        if env.deterministic:
            realized += float(np.sum(mu_true[arms]))
        else:
            realized += float(np.sum(reward_rng.random(arms.size) < mu_true[arms]))

    max_phase = math.log2(2.0 / eps)
    while state.phase < max_phase and len(state.candidates) > 1:
        p = state.phase
        target = phase_target(p, budget, lam[top])
        if target == 0:
            break
        for k in state.candidates:
            need = target - int(state.top_counts[k])
            if need <= 0:
                continue
            arms = np.full(need, k, dtype=np.int64)
            obs = env.pull_many(arms, top, budget=budget)
            collect(arms[: obs.size])
            state.top_counts[k] += obs.size
            state.top_sums[k] += float(obs.sum())
            if obs.size < need:
                truncated = True
                break
        if truncated:
            log.info("budget exhausted during phase %d", p)
            break
        means = state.top_means
        survivors = eliminate(state.candidates, means, p)
        trace.append(PhaseTrace(p, target, {k: float(means[k]) for k in state.candidates}, survivors))
        state.candidates = survivors
        state.phase += 1

    n = env.affordable_pulls(budget, 0)
    if n:
        cands = np.asarray(state.candidates, dtype=np.int64)
        arms = cands[(state.rotation + np.arange(n)) % cands.size]
        state.rotation = (state.rotation + n) % cands.size
        env.pull_many(arms, 0, budget=budget)
        collect(arms)

    optimum = budget / lam[0] * mu_true[0]
    return RegretResult(
        pseudo_regret=optimum - earned,
        realized_regret=optimum - realized,
        num_pulls=env.num_pulls,
        total_cost=env.spent,
        final_candidates=list(state.candidates),
        trace=trace,
        exploration_truncated=truncated,
        pull_log=env.pull_log if record else None,
    )
