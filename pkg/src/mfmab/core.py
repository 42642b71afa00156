"""Multi-fidelity bandit instances and their static quantities.

Arms and fidelities are 0-indexed throughout the package. After
canonicalization arm 0 is the unique optimal arm and fidelity ``M - 1`` is
the highest (most expensive, most accurate) one.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np

DISTRIBUTIONS = ("bernoulli", "deterministic")

# gaps are differences of decimal inputs; treat representation noise as exact
GAP_TOL = 1e-12


class InstanceError(ValueError):
    """Structurally malformed instance (shapes, NaN, unreadable file)."""


@dataclass(frozen=True)
class InstanceSpec:
    costs: tuple[float, ...]
    error_bounds: tuple[float, ...]
    means: tuple[tuple[float, ...], ...]
    distribution: str = "bernoulli"
    # original arm index of each (relabeled) arm
    arm_labels: Optional[tuple[int, ...]] = None

    @classmethod
    def from_arrays(cls, costs, error_bounds, means, distribution="bernoulli", arm_labels=None):
        try:
            means = np.asarray(means, dtype=float)
        except ValueError:
            raise InstanceError("means rows have unequal lengths") from None
        if means.ndim != 2:
            raise InstanceError(f"means must be a K x M matrix, got shape {means.shape}")
        return cls(
            costs=tuple(float(c) for c in costs),
            error_bounds=tuple(float(z) for z in error_bounds),
            means=tuple(tuple(float(v) for v in row) for row in means),
            distribution=distribution,
            arm_labels=None if arm_labels is None else tuple(int(a) for a in arm_labels),
        )

    @property
    def num_arms(self) -> int:
        return len(self.means)

    @property
    def num_fidelities(self) -> int:
        return len(self.costs)

    @cached_property
    def mu(self) -> np.ndarray:
        arr = np.array(self.means, dtype=float)
        arr.setflags(write=False)
        return arr

    @cached_property
    def lam(self) -> np.ndarray:
        arr = np.array(self.costs, dtype=float)
        arr.setflags(write=False)
        return arr

    @cached_property
    def zeta(self) -> np.ndarray:
        arr = np.array(self.error_bounds, dtype=float)
        arr.setflags(write=False)
        return arr

    @property
    def true_means(self) -> np.ndarray:
        """Highest-fidelity means, one per arm."""
        return self.mu[:, -1]

    def with_distribution(self, distribution: str) -> "InstanceSpec":
        return InstanceSpec(self.costs, self.error_bounds, self.means, distribution, self.arm_labels)

    def to_dict(self) -> dict:
        return {
            "arms": self.num_arms,
            "fidelities": self.num_fidelities,
            "costs": list(self.costs),
            "error_bounds": list(self.error_bounds),
            "means": [list(row) for row in self.means],
            "distribution": self.distribution,
        }


@dataclass(frozen=True)
class Violation:
    message: str
    arm: Optional[int] = None
    fidelity: Optional[int] = None
    kind: str = "model"

    def __str__(self) -> str:
        where = []
        if self.arm is not None:
            where.append(f"arm={self.arm}")
        if self.fidelity is not None:
            where.append(f"fidelity={self.fidelity}")
        return self.message + (f" ({', '.join(where)})" if where else "")


@dataclass(frozen=True)
class ValidationOutcome:
    spec: Optional[InstanceSpec]
    violations: tuple[Violation, ...] = ()
    warnings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def blocking(self, allow_inconsistent: bool = False) -> tuple[Violation, ...]:
        """Violations that make the instance unusable.

        With ``allow_inconsistent`` a mean outside its fidelity's error band is
        tolerated: the algorithms still run, but their confidence intervals are
        no longer guaranteed to contain the true mean.
        """
        if not allow_inconsistent:
            return self.violations
        return tuple(v for v in self.violations if v.kind != "consistency")


def _check_structure(spec: InstanceSpec) -> None:
    K, M = spec.num_arms, spec.num_fidelities
    if M < 1:
        raise InstanceError("at least one fidelity is required")
    if K < 1:
        raise InstanceError("at least one arm is required")
    if len(spec.error_bounds) != M:
        raise InstanceError(f"error_bounds has length {len(spec.error_bounds)}, expected {M}")
    for k, row in enumerate(spec.means):
        if len(row) != M:
            raise InstanceError(f"means row {k} has length {len(row)}, expected {M}")
    if spec.arm_labels is not None and sorted(spec.arm_labels) != list(range(K)):
        raise InstanceError("arm_labels must be a permutation of range(K)")
    if spec.distribution not in DISTRIBUTIONS:
        raise InstanceError(f"unknown distribution {spec.distribution!r}")
    values = np.concatenate([spec.lam, spec.zeta, spec.mu.ravel()])
    if not np.all(np.isfinite(values)):
        raise InstanceError("instance contains NaN or infinite values")


def validate_instance(spec: InstanceSpec) -> ValidationOutcome:
    """Check the model constraints and relabel arms by descending true mean.

    Structural problems raise :class:`InstanceError`; violated model
    constraints are collected and returned. The relabeling is stable and is
    recorded in ``arm_labels`` so results can be mapped back.
    """
    _check_structure(spec)
    K, M = spec.num_arms, spec.num_fidelities
    mu, lam, zeta = spec.mu, spec.lam, spec.zeta
    violations: list[Violation] = []
    notes: list[str] = []

    for m in range(M):
        if lam[m] <= 0:
            violations.append(Violation("cost must be positive", fidelity=m))
        if zeta[m] < 0:
            violations.append(Violation("error bound must be non-negative", fidelity=m))
    for m in range(M - 1):
        if lam[m] > lam[m + 1]:
            violations.append(Violation("costs must be non-decreasing", fidelity=m + 1))
    for k in range(K):
        for m in range(M):
            if not 0.0 <= mu[k, m] <= 1.0:
                violations.append(Violation("mean outside [0, 1]", arm=k, fidelity=m))

    order = np.argsort(-mu[:, -1], kind="stable")
    labels = spec.arm_labels if spec.arm_labels is not None else tuple(range(K))
    canonical = InstanceSpec.from_arrays(
        spec.costs,
        spec.error_bounds,
        mu[order],
        spec.distribution,
        arm_labels=[labels[i] for i in order],
    )
    cmu = canonical.mu

    for k in range(K):
        for m in range(M):
            # decimal inputs such as 0.84 - 0.80 land a few ulps above 0.04
            if abs(cmu[k, m] - cmu[k, -1]) > zeta[m] + GAP_TOL:
                violations.append(
                    Violation(
                        f"|mu^(m) - mu^(M)| = {abs(cmu[k, m] - cmu[k, -1]):.6g} exceeds error bound {zeta[m]:.6g}",
                        arm=k,
                        fidelity=m,
                        kind="consistency",
                    )
                )
    if K < 2:
        violations.append(Violation("no unique optimal arm: requires K >= 2"))
    elif cmu[0, -1] == cmu[1, -1]:
        violations.append(Violation("no unique optimal arm: tie at the top", arm=1))

    if zeta[-1] > 0:
        notes.append("error bound at the highest fidelity is positive; lower bounds assume it is 0")

    return ValidationOutcome(canonical, tuple(violations), tuple(notes))


def canonical(spec: InstanceSpec, allow_inconsistent: bool = False) -> InstanceSpec:
    """Validate and return the canonical spec, raising on any blocking violation."""
    outcome = validate_instance(spec)
    blocking = outcome.blocking(allow_inconsistent)
    if blocking:
        raise InstanceError("; ".join(str(v) for v in blocking))
    for v in outcome.violations:
        if v not in blocking:
            warnings.warn(f"tolerated: {v}", stacklevel=2)
    for note in outcome.warnings:
        warnings.warn(note, stacklevel=2)
    return outcome.spec


# ---------------------------------------------------------------------------
# instance files


def _reject_constant(name: str):
    raise InstanceError(f"non-finite literal {name} is not allowed")


def parse_instance(data: dict) -> InstanceSpec:
    try:
        costs = data["costs"]
        error_bounds = data["error_bounds"]
        means = data["means"]
    except KeyError as exc:
        raise InstanceError(f"missing field {exc.args[0]!r}") from None
    spec = InstanceSpec.from_arrays(costs, error_bounds, means, data.get("distribution", "bernoulli"))
    if "arms" in data and data["arms"] != spec.num_arms:
        raise InstanceError(f"'arms' is {data['arms']} but means has {spec.num_arms} rows")
    if "fidelities" in data and data["fidelities"] != spec.num_fidelities:
        raise InstanceError(f"'fidelities' is {data['fidelities']} but costs has {spec.num_fidelities} entries")
    _check_structure(spec)
    if np.any((spec.mu < 0) | (spec.mu > 1)):
        raise InstanceError("means must lie in [0, 1]")
    if np.any(spec.lam <= 0) or np.any(spec.zeta < 0):
        raise InstanceError("costs must be positive and error bounds non-negative")
    return spec


def load_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InstanceError(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except InstanceError as exc:
        raise InstanceError(f"{path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def load_instance(path) -> InstanceSpec:
    data = load_json(path)
    try:
        return parse_instance(data)
    except InstanceError as exc:
        raise InstanceError(f"{path}: {exc}") from None


def save_instance(spec: InstanceSpec, path) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2) + "\n")


# ---------------------------------------------------------------------------
# gaps and fidelities


@dataclass(frozen=True)
class PriorMeans:
    """Upper bound on the best arm's mean and lower bound on the runner-up's."""

    mu1_tilde: float
    mu2_tilde: float

    def __post_init__(self):
        if not (0.0 <= self.mu2_tilde < self.mu1_tilde <= 1.0):
            raise ValueError(f"need 0 <= mu2_tilde < mu1_tilde <= 1, got {self.mu1_tilde}, {self.mu2_tilde}")


@dataclass(frozen=True, eq=False)
class GapTable:
    gaps: np.ndarray  # (K, M), may be negative
    source: InstanceSpec = field(repr=False)


def _gaps(spec: InstanceSpec, top: float, runner_up: float) -> np.ndarray:
    mu, zeta = spec.mu, spec.zeta
    gaps = top - (mu + zeta)
    gaps[0] = (mu[0] - zeta) - runner_up
    gaps[np.abs(gaps) < GAP_TOL] = 0.0
    return gaps


def reward_gaps(spec: InstanceSpec) -> GapTable:
    """Gap between arm k's fidelity-m confidence edge and the competing true mean."""
    mu = spec.mu
    return GapTable(_gaps(spec, mu[0, -1], mu[1, -1]), spec)


def ancillary_gaps(spec: InstanceSpec, prior: PriorMeans) -> GapTable:
    """Reward gaps with the top-two true means replaced by the prior bounds."""
    return GapTable(_gaps(spec, prior.mu1_tilde, prior.mu2_tilde), spec)


def efficiency(gaps: GapTable | np.ndarray, costs) -> np.ndarray:
    g = gaps.gaps if isinstance(gaps, GapTable) else np.asarray(gaps)
    return g / np.sqrt(np.asarray(costs, dtype=float))


def optimal_fidelity(gaps: GapTable | np.ndarray, costs) -> np.ndarray:
    """Per-arm fidelity maximizing gap / sqrt(cost); lowest index wins ties."""
    g = gaps.gaps if isinstance(gaps, GapTable) else np.asarray(gaps)
    bad = np.flatnonzero(~np.any(g > 0, axis=1))
    if bad.size:
        raise ValueError(f"arm {int(bad[0])} indistinguishable at every fidelity (no positive gap)")
    return np.argmax(efficiency(g, costs), axis=1)


def smallest_separating_fidelity(gaps: GapTable, error_bounds) -> list[Optional[int]]:
    """First fidelity whose gap exceeds twice its error bound, or None."""
    g = gaps.gaps
    zeta = np.asarray(error_bounds, dtype=float)
    out: list[Optional[int]] = []
    for row in g:
        hits = np.flatnonzero(row - 2 * zeta > GAP_TOL)
        out.append(int(hits[0]) if hits.size else None)
    return out


@dataclass(frozen=True)
class HardnessReport:
    m_star: tuple[int, ...]
    m_tilde_star: tuple[int, ...]
    m_ddagger: tuple[Optional[int], ...]
    H: float
    H_tilde: float
    G_tilde: float
    H_ddagger: Optional[float]
    Q: Optional[float]


def _cost_over_gap_sq(lam: np.ndarray, gaps: np.ndarray, fids) -> float:
    return float(sum(lam[m] / gaps[k, m] ** 2 for k, m in enumerate(fids)))


def hardness(spec: InstanceSpec, prior: PriorMeans) -> HardnessReport:
    """Hardness coefficients behind the cost-complexity bounds.

    ``H_ddagger`` and ``Q`` are ``None`` when some arm has no fidelity with
    gap above twice its error bound.
    """
    lam, zeta = spec.lam, spec.zeta
    gaps = reward_gaps(spec)
    tgaps = ancillary_gaps(spec, prior)
    m_star = optimal_fidelity(gaps, lam)
    m_tilde = optimal_fidelity(tgaps, lam)

    H = _cost_over_gap_sq(lam, gaps.gaps, m_star)
    H_tilde = _cost_over_gap_sq(lam, tgaps.gaps, m_tilde)

    eff = efficiency(tgaps, lam)
    G_tilde = 0.0
    for k, best in enumerate(m_tilde):
        for m in range(spec.num_fidelities):
            if m == best:
                continue
            diff = eff[k, best] - eff[k, m]
            G_tilde += math.inf if diff == 0 else diff**-2

    m_dd = smallest_separating_fidelity(gaps, zeta)
    if any(m is None for m in m_dd):
        H_dd = Q = None
    else:
        H_dd = _cost_over_gap_sq(lam, gaps.gaps, m_dd)
        Q = 0.0
        for m_k in m_dd:
            for m in range(m_k):
                Q += math.inf if zeta[m] == 0 else lam[m] / zeta[m] ** 2

    return HardnessReport(
        m_star=tuple(int(m) for m in m_star),
        m_tilde_star=tuple(int(m) for m in m_tilde),
        m_ddagger=tuple(m_dd),
        H=H,
        H_tilde=H_tilde,
        G_tilde=G_tilde,
        H_ddagger=H_dd,
        Q=Q,
    )
