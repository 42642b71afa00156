"""Fixed-confidence best arm identification with multi-fidelity LUCB.

Each round selects the two arms with the largest upper confidence bounds
and explores both (runner-up first) with one of three fidelity-selection
procedures:

* ``A`` -- optimistic index over gap/sqrt(cost) per fidelity (f-UCB);
* ``B`` -- uniform exploration over fidelities until one is provably good,
  then commit to it;
* ``C`` -- climb the fidelity ladder once the confidence radius at the
  current level falls below its error bound (needs no prior).

The round loop is compiled with numba. The per-step functions below call the
same compiled kernels, so ``engine="python"`` is an instrumented but
bit-identical replay of the compiled run.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

from .core import InstanceSpec, PriorMeans
from .env import EnvState

log = logging.getLogger(__name__)

PROCEDURES = ("A", "B", "C")
_PROC_CODE = {"A": 0, "B": 1, "C": 2}

DEFAULT_MAX_PULLS = 10_000_000


@dataclass(frozen=True)
class BaiConfig:
    delta: float
    L: float
    procedure: str = "A"
    prior: Optional[PriorMeans] = None
    max_pulls: int = DEFAULT_MAX_PULLS

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if self.L <= 0:
            raise ValueError("L must be positive")
        proc = self.procedure.upper()
        if proc not in PROCEDURES:
            raise ValueError(f"procedure must be one of {PROCEDURES}, got {self.procedure!r}")
        object.__setattr__(self, "procedure", proc)
        if proc in ("A", "B") and self.prior is None:
            raise ValueError(f"procedure {proc} needs prior means (mu1_tilde, mu2_tilde)")

    @classmethod
    def for_instance(cls, spec: InstanceSpec, delta: float, procedure: str = "A",
                     prior: Optional[PriorMeans] = None, **kw) -> "BaiConfig":
        """Config with the smallest L covered by the correctness guarantee, 4KM."""
        return cls(delta, 4.0 * spec.num_arms * spec.num_fidelities, procedure, prior, **kw)

    def check_L(self, spec: InstanceSpec) -> bool:
        return self.L >= 4 * spec.num_arms * spec.num_fidelities


@dataclass
class BaiRunState:
    sums: np.ndarray
    counts: np.ndarray
    fixed: np.ndarray
    committed: np.ndarray
    leader: int = 0
    runner_up: int = 1
    t: int = 1
    ladder_fallbacks: int = 0

    @classmethod
    def empty(cls, K: int, M: int) -> "BaiRunState":
        return cls(
            sums=np.zeros((K, M)),
            counts=np.zeros((K, M), dtype=np.int64),
            fixed=np.zeros(K, dtype=np.bool_),
            committed=np.full(K, -1, dtype=np.int64),
        )

    @property
    def means(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.counts > 0, self.sums / np.maximum(self.counts, 1), 0.0)

    @property
    def arm_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)


@dataclass
class BaiResult:
    chosen_arm: int
    total_cost: float
    rounds: int
    counts: np.ndarray
    terminated_by: str
    committed: Optional[np.ndarray] = None
    ladder_fallbacks: int = 0

    @property
    def num_pulls(self) -> int:
        return int(self.counts.sum())


# ---------------------------------------------------------------------------
# compiled kernels


@numba.njit(cache=True)
def _log_term(t, L, delta):
    tf = float(t)
    return math.log(L * tf * tf * tf * tf / delta)


@numba.njit(cache=True)
def _radius(n, log_term):
    if n == 0:
        return np.inf
    if log_term <= 0.0:
        return 0.0
    return math.sqrt(log_term / n)


@numba.njit(cache=True)
def _arm_bounds(sums, counts, zeta, k, log_term):
    M = counts.shape[1]
    ucb = np.inf
    lcb = -np.inf
    pulled = False
    for m in range(M):
        n = counts[k, m]
        if n == 0:
            continue
        pulled = True
        mean = sums[k, m] / n
        beta = _radius(n, log_term)
        u = mean + zeta[m] + beta
        lo = mean - zeta[m] - beta
        if u < ucb:
            ucb = u
        if lo > lcb:
            lcb = lo
    if not pulled:
        return 1.0, 0.0
    return ucb, lcb


@numba.njit(cache=True)
def _all_bounds(sums, counts, zeta, log_term, ucb, lcb):
    for k in range(counts.shape[0]):
        ucb[k], lcb[k] = _arm_bounds(sums, counts, zeta, k, log_term)


@numba.njit(cache=True)
def _top_two(ucb):
    lead = 0
    for k in range(1, ucb.shape[0]):
        if ucb[k] > ucb[lead]:
            lead = k
    second = 1 if lead == 0 else 0
    for k in range(ucb.shape[0]):
        if k != lead and ucb[k] > ucb[second]:
            second = k
    return lead, second


@numba.njit(cache=True)
def _gap_hat(sums, counts, zeta, k, m, leader, mu1t, mu2t):
    mean = sums[k, m] / counts[k, m] if counts[k, m] > 0 else 0.0
    if k == leader:
        return (mean - zeta[m]) - mu2t
    return mu1t - (mean + zeta[m])


@numba.njit(cache=True)
def _fidelity_a(sums, counts, zeta, costs, k, leader, mu1t, mu2t):
    M = counts.shape[1]
    total = 0
    for m in range(M):
        if counts[k, m] == 0:
            return m
        total += counts[k, m]
    best = 0
    best_val = -np.inf
    log_n = math.log(total)
    for m in range(M):
        val = _gap_hat(sums, counts, zeta, k, m, leader, mu1t, mu2t) / math.sqrt(costs[m])
        val += math.sqrt(2.0 * log_n / (costs[m] * counts[k, m]))
        if val > best_val:
            best_val = val
            best = m
    return best


@numba.njit(cache=True)
def _commit_b(sums, counts, zeta, costs, k, leader, mu1t, mu2t, L, delta):
    """Fidelity to commit to after a uniform sweep, or -1."""
    M = counts.shape[1]
    n = counts[k, 0]
    for m in range(1, M):
        if counts[k, m] < n:
            n = counts[k, m]
    if n == 0:
        return -1
    best = 0
    best_val = -np.inf
    for m in range(M):
        val = _gap_hat(sums, counts, zeta, k, m, leader, mu1t, mu2t) / math.sqrt(costs[m])
        if val > best_val:
            best_val = val
            best = m
    if best_val > 3.0 * math.sqrt(math.log(L / delta) / (costs[0] * n)):
        return best
    return -1


@numba.njit(cache=True)
def _fidelity_c(counts, zeta, k, log_term):
    """Lowest fidelity whose radius still covers its error bound; -1 if none."""
    for m in range(counts.shape[1]):
        if _radius(counts[k, m], log_term) >= zeta[m]:
            return m
    return -1


@numba.njit(cache=True)
def _observe(rng, means, k, m, deterministic):
    if deterministic:
        return means[k, m]
    return 1.0 if rng.random() < means[k, m] else 0.0


@numba.njit(cache=True)
def _explore(proc, k, leader, t, sums, counts, fixed, committed, env_counts,
             means, costs, zeta, deterministic, rng, L, delta, mu1t, mu2t):
    """One exploration call on arm k. Returns (pulls made, ladder fallback flag)."""
    M = counts.shape[1]
    if proc == 1:
        if fixed[k]:
            m = committed[k]
            x = _observe(rng, means, k, m, deterministic)
            sums[k, m] += x
            counts[k, m] += 1
            env_counts[k, m] += 1
            return 1, 0
        for m in range(M):
            x = _observe(rng, means, k, m, deterministic)
            sums[k, m] += x
            counts[k, m] += 1
            env_counts[k, m] += 1
        c = _commit_b(sums, counts, zeta, costs, k, leader, mu1t, mu2t, L, delta)
        if c >= 0:
            fixed[k] = True
            committed[k] = c
        return M, 0
    fallback = 0
    if proc == 0:
        m = _fidelity_a(sums, counts, zeta, costs, k, leader, mu1t, mu2t)
    else:
        m = _fidelity_c(counts, zeta, k, _log_term(t, L, delta))
        if m < 0:
            m = M - 1
            fallback = 1
    x = _observe(rng, means, k, m, deterministic)
    sums[k, m] += x
    counts[k, m] += 1
    env_counts[k, m] += 1
    return 1, fallback


@numba.njit(cache=True)
def _lucb_loop(proc, sums, counts, fixed, committed, env_counts, means, costs, zeta,
               deterministic, rng, L, delta, mu1t, mu2t, t, max_pulls):
    """Run LUCB rounds until the stopping rule fires or the pull cap is hit.

    Returns (leader, runner_up, final t, hit_cap, ladder fallbacks).
    """
    K = counts.shape[0]
    ucb = np.empty(K)
    lcb = np.empty(K)
    pulls = 0
    for k in range(K):
        for m in range(counts.shape[1]):
            pulls += counts[k, m]
    fallbacks = 0
    while True:
        _all_bounds(sums, counts, zeta, _log_term(t, L, delta), ucb, lcb)
        lead, second = _top_two(ucb)
        if lcb[lead] > ucb[second]:
            return lead, second, t, False, fallbacks
        if pulls >= max_pulls:
            return lead, second, t, True, fallbacks
        for k in (second, lead):
            n, fb = _explore(proc, k, lead, t, sums, counts, fixed, committed, env_counts,
                             means, costs, zeta, deterministic, rng, L, delta, mu1t, mu2t)
            pulls += n
            fallbacks += fb
        t += 1


# ---------------------------------------------------------------------------
# step API


def _prior_values(cfg: BaiConfig) -> tuple[float, float]:
    if cfg.prior is None:
        return 1.0, 0.0
    return cfg.prior.mu1_tilde, cfg.prior.mu2_tilde


def confidence_radius(n: int, t: int, cfg: BaiConfig) -> float:
    """sqrt(log(L t^4 / delta) / n); infinite for an unpulled cell."""
    return float(_radius(n, _log_term(t, cfg.L, cfg.delta)))


def ucb_lcb(state: BaiRunState, cfg: BaiConfig, spec: InstanceSpec, arm: int) -> tuple[float, float]:
    """Tightest confidence bounds on the arm's true mean across fidelities."""
    ucb, lcb = _arm_bounds(state.sums, state.counts, spec.zeta, arm, _log_term(state.t, cfg.L, cfg.delta))
    return float(ucb), float(lcb)


def all_bounds(state: BaiRunState, cfg: BaiConfig, spec: InstanceSpec) -> tuple[np.ndarray, np.ndarray]:
    K = spec.num_arms
    ucb, lcb = np.empty(K), np.empty(K)
    _all_bounds(state.sums, state.counts, spec.zeta, _log_term(state.t, cfg.L, cfg.delta), ucb, lcb)
    return ucb, lcb


def select_critical_arms(ucb) -> tuple[int, int]:
    """Indices of the largest and second-largest UCB (lowest index on ties)."""
    lead, second = _top_two(np.asarray(ucb, dtype=float))
    return int(lead), int(second)


def _pull_into(state: BaiRunState, env: EnvState, arm: int, fidelity: int) -> float:
    x = env.pull(arm, fidelity)
    state.sums[arm, fidelity] += x
    state.counts[arm, fidelity] += 1
    return x


def explore_a_step(state: BaiRunState, env: EnvState, cfg: BaiConfig, arm: int) -> int:
    spec = env.spec
    mu1t, mu2t = _prior_values(cfg)
    m = int(_fidelity_a(state.sums, state.counts, spec.zeta, spec.lam, arm, state.leader, mu1t, mu2t))
    _pull_into(state, env, arm, m)
    return m


def explore_b_step(state: BaiRunState, env: EnvState, cfg: BaiConfig, arm: int) -> list[int]:
    spec = env.spec
    if state.fixed[arm]:
        m = int(state.committed[arm])
        _pull_into(state, env, arm, m)
        return [m]
    for m in range(spec.num_fidelities):
        _pull_into(state, env, arm, m)
    mu1t, mu2t = _prior_values(cfg)
    c = int(_commit_b(state.sums, state.counts, spec.zeta, spec.lam, arm, state.leader,
                      mu1t, mu2t, cfg.L, cfg.delta))
    if c >= 0:
        state.fixed[arm] = True
        state.committed[arm] = c
    return list(range(spec.num_fidelities))


def explore_c_step(state: BaiRunState, env: EnvState, cfg: BaiConfig, arm: int) -> int:
    spec = env.spec
    m = int(_fidelity_c(state.counts, spec.zeta, arm, _log_term(state.t, cfg.L, cfg.delta)))
    if m < 0:
        log.warning("no fidelity radius covers its error bound for arm %d; using the highest", arm)
        m = spec.num_fidelities - 1
        state.ladder_fallbacks += 1
    _pull_into(state, env, arm, m)
    return m


_STEPS = {"A": explore_a_step, "B": explore_b_step, "C": explore_c_step}


# ---------------------------------------------------------------------------
# drivers


def _check_invariants(state: BaiRunState, cfg: BaiConfig, spec: InstanceSpec, env: EnvState) -> None:
    ucb, lcb = all_bounds(state, cfg, spec)
    assert np.all(lcb <= ucb), "LCB above UCB"
    means = state.means
    assert np.all((means >= 0) & (means <= 1))
    assert np.array_equal(state.counts, env.counts)
    if env.record:
        assert env.num_pulls == env.log_length


def _run_python(spec: InstanceSpec, cfg: BaiConfig, env: EnvState, state: BaiRunState,
                debug: bool) -> tuple[int, bool]:
    step = _STEPS[cfg.procedure]
    while True:
        ucb, lcb = all_bounds(state, cfg, spec)
        state.leader, state.runner_up = select_critical_arms(ucb)
        if lcb[state.leader] > ucb[state.runner_up]:
            return state.leader, False
        if env.num_pulls >= cfg.max_pulls:
            return state.leader, True
        step(state, env, cfg, state.runner_up)
        step(state, env, cfg, state.leader)
        if debug:
            _check_invariants(state, cfg, spec, env)
        state.t += 1


def run_bai(spec: InstanceSpec, cfg: BaiConfig, seed, engine: str = "numba",
            debug: bool = False) -> BaiResult:
    """Identify the best arm of a canonical instance.

    ``engine="python"`` drives the step functions one call at a time and
    records the full pull log; ``debug`` additionally asserts the
    confidence-bound invariants after every round.
    """
    K, M = spec.num_arms, spec.num_fidelities
    if K < 2:
        raise ValueError("best arm identification needs at least two arms")
    if not cfg.check_L(spec):
        log.warning("L=%g is below 4KM=%d; the 1-delta guarantee does not apply", cfg.L, 4 * K * M)
    state = BaiRunState.empty(K, M)
    mu1t, mu2t = _prior_values(cfg)

    if engine == "python":
        env = EnvState(spec, seed, record=True)
        chosen, capped = _run_python(spec, cfg, env, state, debug)
        fallbacks = state.ladder_fallbacks
    elif engine == "numba":
        env = EnvState(spec, seed, record=False)
        lead, second, t, capped, fallbacks = _lucb_loop(
            _PROC_CODE[cfg.procedure], state.sums, state.counts, state.fixed, state.committed,
            env.counts, spec.mu, spec.lam, spec.zeta, env.deterministic, env.rng,
            float(cfg.L), float(cfg.delta), mu1t, mu2t, state.t, cfg.max_pulls,
        )
        state.leader, state.runner_up, state.t = int(lead), int(second), int(t)
        chosen = state.leader
        if fallbacks:
            log.warning("fidelity ladder exhausted %d times; pulled the highest fidelity", fallbacks)
    else:
        raise ValueError(f"unknown engine {engine!r}")

    return BaiResult(
        chosen_arm=int(chosen),
        total_cost=env.spent,
        rounds=state.t - 1,
        counts=state.counts.copy(),
        terminated_by="cap" if capped else "stopping_rule",
        committed=state.committed.copy() if cfg.procedure == "B" else None,
        ladder_fallbacks=int(fallbacks),
    )
