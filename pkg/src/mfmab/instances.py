"""Benchmark instances used in the simulations."""

from __future__ import annotations

from .core import InstanceSpec, PriorMeans

# rows are arms, columns fidelities
TABLE2 = InstanceSpec.from_arrays(
    costs=[1.0, 1.1, 1.2],
    error_bounds=[0.30, 0.15, 0.0],
    means=[
        [0.70, 0.80, 0.90],
        [0.75, 0.775, 0.80],
        [0.50, 0.60, 0.70],
        [0.50, 0.55, 0.60],
        [0.30, 0.45, 0.50],
    ],
)

TABLE3 = InstanceSpec.from_arrays(
    costs=[1.0, 1.1, 1.2, 1.3, 1.4],
    error_bounds=[0.10, 0.08, 0.06, 0.04, 0.0],
    means=[
        [0.83, 0.84, 0.85, 0.85, 0.90],
        [0.82, 0.83, 0.85, 0.86, 0.88],
        [0.76, 0.80, 0.80, 0.80, 0.86],
        [0.82, 0.80, 0.82, 0.80, 0.84],
        [0.70, 0.72, 0.74, 0.76, 0.80],
    ],
)

SIMULATION_PRIOR = PriorMeans(0.95, 0.75)


def two_arm(best: float = 0.6, gap: float = 0.1, costs=(1.0, 1.2), zeta=(0.3, 0.0),
            distribution: str = "bernoulli") -> InstanceSpec:
    """Two arms whose low-fidelity means equal their true means."""
    M = len(costs)
    return InstanceSpec.from_arrays(
        costs, zeta, [[best] * M, [best - gap] * M], distribution
    )


BUILTIN = {"table2": TABLE2, "table3": TABLE3}
