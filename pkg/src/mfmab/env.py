"""Seeded stochastic environment with a cost ledger.

Randomness comes from numpy's PCG64 bit generator seeded through
``SeedSequence``; every Bernoulli pull consumes exactly one
``Generator.random()`` double and succeeds when it is below the mean.
Deterministic instances return the mean itself and consume nothing.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .core import InstanceSpec

LOG_DTYPE = np.dtype([("t", np.int64), ("arm", np.int64), ("fidelity", np.int64), ("obs", np.float64)])


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator for an integer seed or a SeedSequence."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.PCG64(ss))


class EnvState:
    """One trial's environment.

    ``counts[k, m]`` tracks pulls per cell. The pull log is kept in chunks
    when ``record`` is true; compiled drivers that bypass :meth:`pull` only
    update ``counts``.
    """

    def __init__(self, spec: InstanceSpec, seed, record: bool = True):
        self.spec = spec
        self.rng_seed = seed
        self.rng = make_rng(seed)
        self.record = record
        self.counts = np.zeros((spec.num_arms, spec.num_fidelities), dtype=np.int64)
        self.deterministic = spec.distribution == "deterministic"
        self._chunks: list[np.ndarray] = []
        self._logged = 0
        self._t = 0

    @property
    def spent(self) -> float:
        return float(self.counts.sum(axis=0) @ self.spec.lam)

    @property
    def num_pulls(self) -> int:
        return int(self.counts.sum())

    @property
    def log_length(self) -> int:
        return self._logged

    @property
    def pull_log(self) -> np.ndarray:
        if not self._chunks:
            return np.zeros(0, dtype=LOG_DTYPE)
        return np.concatenate(self._chunks)

    def _check(self, arm: int, fidelity: int) -> None:
        K, M = self.counts.shape
        if not (0 <= arm < K and 0 <= fidelity < M):
            raise IndexError(f"(arm={arm}, fidelity={fidelity}) outside {K} x {M} instance")

    def _draw(self, mu: np.ndarray) -> np.ndarray:
        if self.deterministic:
            return mu.astype(float)
        return (self.rng.random(mu.shape[0]) < mu).astype(float)

    def pull(self, arm: int, fidelity: int) -> float:
        self._check(arm, fidelity)
        mu = self.spec.mu[arm, fidelity]
        obs = mu if self.deterministic else float(self.rng.random() < mu)
        self.counts[arm, fidelity] += 1
        self._t += 1
        if self.record:
            self._chunks.append(np.array([(self._t, arm, fidelity, obs)], dtype=LOG_DTYPE))
            self._logged += 1
        return obs

    def pull_many(self, arms, fidelity: int, budget: Optional[float] = None) -> np.ndarray:
        """Pull ``arms`` in order at one fidelity, stopping at the first unaffordable pull.

        Returns the observations actually made (possibly fewer than requested).
        """
        arms = np.asarray(arms, dtype=np.int64)
        if arms.size == 0:
            return np.zeros(0)
        self._check(int(arms.min()), fidelity)
        self._check(int(arms.max()), fidelity)
        if budget is not None:
            arms = arms[: self.affordable_pulls(budget, fidelity, limit=arms.size)]
        obs = self._draw(self.spec.mu[arms, fidelity])
        np.add.at(self.counts[:, fidelity], arms, 1)
        n = arms.size
        if self.record and n:
            chunk = np.empty(n, dtype=LOG_DTYPE)
            chunk["t"] = np.arange(self._t + 1, self._t + n + 1)
            chunk["arm"] = arms
            chunk["fidelity"] = fidelity
            chunk["obs"] = obs
            self._chunks.append(chunk)
            self._logged += n
        self._t += n
        return obs

    def remaining_budget(self, budget: float) -> float:
        return budget - self.spent

    def can_afford(self, budget: float, fidelity: int) -> bool:
        return bool(self.spent + self.spec.lam[fidelity] <= budget)

    def affordable_pulls(self, budget: float, fidelity: int, limit: Optional[int] = None) -> int:
        """Largest n such that n more pulls at ``fidelity`` keep spent <= budget."""
        lam = self.spec.lam
        per_fid = self.counts.sum(axis=0).astype(float)
        base = per_fid.copy()

        def total(n: int) -> float:
            base[fidelity] = per_fid[fidelity] + n
            return float(base @ lam)

        n = max(int((budget - self.spent) // lam[fidelity]), 0)
        if limit is not None:
            n = min(n, limit)
        # floor division can be off by one against the exact ledger
        while n > 0 and total(n) > budget:
            n -= 1
        while (limit is None or n < limit) and total(n + 1) <= budget:
            n += 1
        return n
