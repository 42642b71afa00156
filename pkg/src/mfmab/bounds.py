"""Numeric evaluation of the cost-complexity and regret bound expressions.

Every reported bound is a bare expression: the unspecified constants of
the lower bounds are set to 1 and the O(.) constants of the upper bounds are
dropped, so the values describe shapes and scaling, not certified limits.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .core import (
    InstanceSpec,
    PriorMeans,
    hardness,
    optimal_fidelity,
    reward_gaps,
)


def bernoulli_kl(p: float, q: float) -> float:
    """KL divergence between Bernoulli(p) and Bernoulli(q), with 0 log 0 = 0."""
    if not 0.0 <= p <= 1.0 or not 0.0 <= q <= 1.0:
        raise ValueError(f"probabilities must lie in [0, 1], got p={p}, q={q}")
    if q in (0.0, 1.0):
        return 0.0 if p == q else math.inf
    out = 0.0
    if p > 0:
        out += p * math.log(p / q)
    if p < 1:
        out += (1 - p) * math.log((1 - p) / (1 - q))
    return out


def _kl_targets(spec: InstanceSpec) -> np.ndarray:
    """Shifted alternative means each (arm, fidelity) must be told apart from."""
    mu, zeta = spec.mu, spec.zeta
    targets = np.empty_like(mu)
    targets[0] = mu[1, -1] + zeta
    targets[1:] = mu[0, -1] - zeta
    return targets


def bai_lower_bound(spec: InstanceSpec, delta: float) -> tuple[float, float]:
    """(KL form, simplified gap form) of the cost-complexity lower bound.

    Only fidelities whose shifted target lies strictly inside (0, 1) and on
    the far side of the arm's own mean enter the KL minimum.
    """
    if spec.zeta[-1] != 0:
        raise ValueError("the lower bound needs a zero error bound at the highest fidelity")
    if not 0 < delta < 1 / 2.4:
        raise ValueError("delta must lie in (0, 1/2.4) for a positive log factor")
    mu, lam = spec.mu, spec.lam
    targets = _kl_targets(spec)
    gaps = reward_gaps(spec).gaps

    kl_sum = 0.0
    for k in range(spec.num_arms):
        best = math.inf
        for m in range(spec.num_fidelities):
            q = targets[k, m]
            if not 0.0 < q < 1.0 or gaps[k, m] <= 0:
                continue
            best = min(best, lam[m] / bernoulli_kl(mu[k, m], q))
        if math.isinf(best):
            raise ValueError(f"arm {k} has no admissible fidelity for the KL bound")
        kl_sum += best

    simplified = sum(
        min(lam[m] / gaps[k, m] ** 2 for m in range(spec.num_fidelities) if gaps[k, m] > 0)
        for k in range(spec.num_arms)
    )
    return kl_sum * math.log(1 / (2.4 * delta)), simplified * math.log(1 / delta)


@dataclass
class UpperBounds:
    A: tuple[float, float]
    B: float
    C: Optional[tuple[float, float]]
    loglog_clamped: bool = False

    @property
    def A_total(self) -> float:
        return sum(self.A)

    @property
    def C_total(self) -> Optional[float]:
        return None if self.C is None else sum(self.C)


def bai_upper_bounds(spec: InstanceSpec, prior: PriorMeans, delta: float, L: float) -> UpperBounds:
    """Cost-complexity upper-bound expressions for the three procedures."""
    rep = hardness(spec, prior)
    lam1 = spec.lam[0]
    H, G = rep.H_tilde, rep.G_tilde

    arg = L * (H + G) / (lam1 * delta)
    lead = H * math.log(arg)
    clamped = False
    if math.log(arg) <= 1:
        second, clamped = 0.0, True
    else:
        second = G * math.log(math.log(arg)) if G > 0 else 0.0

    ratio = float(np.sum(spec.lam / lam1))
    b = H * ratio * math.log(ratio * H * L / (lam1 * delta))

    c = None
    if rep.H_ddagger is not None:
        arg_c = L * (rep.H_ddagger + rep.Q) / (lam1 * delta)
        c = (rep.H_ddagger * math.log(arg_c), rep.Q * math.log(arg_c) if rep.Q > 0 else 0.0)
    return UpperBounds((lead, second), b, c, clamped)


def check_assumption_arm2(spec: InstanceSpec) -> tuple[bool, list[int]]:
    """Is the runner-up's true mean above every other arm's upper edge at its optimal fidelity?"""
    m_star = optimal_fidelity(reward_gaps(spec), spec.lam)
    mu, zeta = spec.mu, spec.zeta
    runner_up = mu[1, -1]
    bad = [k for k in range(1, spec.num_arms) if runner_up < mu[k, m_star[k]] + zeta[m_star[k]]]
    return not bad, bad


@dataclass
class RegretBounds:
    dep_lb_coeff: float
    dep_ub_coeff: float
    finite_dep_ub: Optional[float]
    indep_ub: Optional[float]
    dep_lb_terms: np.ndarray = field(repr=False)
    dep_ub_terms: np.ndarray = field(repr=False)
    indep_log_nonpositive: bool = False


def _slot_cost(spec: InstanceSpec, m: int, k: int) -> float:
    # regret of spending one fidelity-m pull on arm k, in units of fidelity-1 slots
    mu = spec.true_means
    return spec.lam[m] / spec.lam[0] * mu[0] - mu[k]


def finite_dep_upper_bound(spec: InstanceSpec, budget: float, epsilon: float) -> float:
    """Finite-budget problem-dependent regret upper bound of the elimination algorithm."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    mu = spec.true_means
    lam1, lamM = spec.lam[0], spec.lam[-1]
    gaps = mu[0] - mu
    total = 0.0
    small = []
    for k, gap in enumerate(gaps):
        w = _slot_cost(spec, spec.num_fidelities - 1, k)
        if gap > epsilon:
            total += w * (16 / gap**2 * math.log(budget * gap**2 / (16 * lamM)) + 48 / gap**2 + 1) + 64 / gap
        else:
            small.append(gap)
            total += w * (16 / epsilon**2 * math.log(budget * epsilon**2 / (16 * lamM))
                          + 32 / (3 * epsilon**2) + 1) + 64 / epsilon
    if small:
        total += budget / lam1 * max(small)
    return total


def indep_upper_bound(spec: InstanceSpec, budget: float) -> Optional[float]:
    """Closed-form worst-case regret bound; None when log(budget / (16 cost_M)) <= 0."""
    lam1, lamM = spec.lam[0], spec.lam[-1]
    arg = budget / (16 * lamM)
    if arg <= 1:
        return None
    inner = 16 * spec.num_arms * spec.true_means[0] * lamM / lam1 * math.log(arg)
    return 2 * inner ** (1 / 3) * (budget / lam1) ** (2 / 3)


def regret_bounds(spec: InstanceSpec, budget: Optional[float] = None,
                  epsilon: Optional[float] = None) -> RegretBounds:
    gaps = reward_gaps(spec).gaps
    top_gaps = spec.true_means[0] - spec.true_means
    if np.any(top_gaps[1:] <= 0):
        raise ValueError("every suboptimal arm needs a positive top-fidelity gap")
    M = spec.num_fidelities

    lb_terms = np.array([
        min(_slot_cost(spec, m, k) / gaps[k, m] ** 2 for m in range(M) if gaps[k, m] > 0)
        for k in range(spec.num_arms)
    ])
    ub_terms = np.array([0.0] + [
        _slot_cost(spec, M - 1, k) * 16 / top_gaps[k] ** 2 for k in range(1, spec.num_arms)
    ])

    finite = indep = None
    flagged = False
    if budget is not None:
        if epsilon is not None and not epsilon > 0:
            raise ValueError("epsilon must be positive")
        if epsilon is not None:
            finite = finite_dep_upper_bound(spec, budget, epsilon)
        indep = indep_upper_bound(spec, budget)
        flagged = indep is None
    return RegretBounds(
        dep_lb_coeff=float(lb_terms.sum()),
        dep_ub_coeff=float(ub_terms.sum()),
        finite_dep_ub=finite,
        indep_ub=indep,
        dep_lb_terms=lb_terms,
        dep_ub_terms=ub_terms,
        indep_log_nonpositive=flagged,
    )


@dataclass
class BoundReport:
    delta: float
    gaps: list[list[float]]
    m_star: list[int]
    H: float
    bai_lb_kl: Optional[float] = None
    bai_lb_simplified: Optional[float] = None
    assumption_arm2_ok: Optional[bool] = None
    assumption_arm2_violations: list[int] = field(default_factory=list)
    m_tilde_star: Optional[list[int]] = None
    m_ddagger: Optional[list[Optional[int]]] = None
    H_tilde: Optional[float] = None
    G_tilde: Optional[float] = None
    H_ddagger: Optional[float] = None
    Q: Optional[float] = None
    bai_ub_A: Optional[tuple[float, float]] = None
    bai_ub_B: Optional[float] = None
    bai_ub_C: Optional[tuple[float, float]] = None
    regret_dep_lb_coeff: Optional[float] = None
    regret_dep_ub_coeff: Optional[float] = None
    regret_finite_dep_ub: Optional[float] = None
    regret_indep_ub: Optional[float] = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def bound_report(spec: InstanceSpec, delta: float, prior: Optional[PriorMeans] = None,
                 L: Optional[float] = None, budget: Optional[float] = None,
                 epsilon: Optional[float] = None) -> BoundReport:
    """Collect every computable bound for an instance; skipped parts go to ``notes``."""
    gaps = reward_gaps(spec)
    m_star = optimal_fidelity(gaps, spec.lam)
    H = float(sum(spec.lam[m] / gaps.gaps[k, m] ** 2 for k, m in enumerate(m_star)))
    rep = BoundReport(delta, gaps.gaps.tolist(), [int(m) for m in m_star], H)
    rep.notes.append("constants of O/Omega expressions dropped; lower-bound constant C reported as 1")

    try:
        rep.bai_lb_kl, rep.bai_lb_simplified = bai_lower_bound(spec, delta)
    except ValueError as exc:
        rep.notes.append(f"BAI lower bound skipped: {exc}")
    rep.assumption_arm2_ok, rep.assumption_arm2_violations = check_assumption_arm2(spec)

    if prior is not None:
        L = L if L is not None else 4.0 * spec.num_arms * spec.num_fidelities
        h = hardness(spec, prior)
        rep.m_tilde_star = list(h.m_tilde_star)
        rep.m_ddagger = list(h.m_ddagger)
        rep.H_tilde, rep.G_tilde, rep.H_ddagger, rep.Q = h.H_tilde, h.G_tilde, h.H_ddagger, h.Q
        ub = bai_upper_bounds(spec, prior, delta, L)
        rep.bai_ub_A, rep.bai_ub_B, rep.bai_ub_C = ub.A, ub.B, ub.C
        if ub.loglog_clamped:
            rep.notes.append("log log term of the Explore-A bound clamped to 0")
        if ub.C is None:
            rep.notes.append("Explore-C bound undefined: some arm never separates by twice its error bound")

    try:
        rb = regret_bounds(spec, budget, epsilon)
    except ValueError as exc:
        rep.notes.append(f"regret bounds skipped: {exc}")
    else:
        rep.regret_dep_lb_coeff, rep.regret_dep_ub_coeff = rb.dep_lb_coeff, rb.dep_ub_coeff
        rep.regret_finite_dep_ub, rep.regret_indep_ub = rb.finite_dep_ub, rb.indep_ub
        if rb.indep_log_nonpositive:
            rep.notes.append("budget <= 16 * highest cost: worst-case regret bound undefined")
    return rep
