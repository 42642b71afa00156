"""Multi-fidelity multi-armed bandits: best arm identification, regret minimization, bounds."""
