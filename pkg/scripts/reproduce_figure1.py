"""Cost complexity of Explore-A and Explore-B across confidence levels.

Runs the two bundled plans (5-arm/3-fidelity and 5-arm/5-fidelity
instances) and prints mean +- std total cost per delta, together with the
simplified lower bound for reference. CSVs land in --out/<plan name>/.

    python scripts/reproduce_figure1.py --out runs/figure1 --trials 100
"""

import argparse
from pathlib import Path

from mfmab.bounds import bai_lower_bound
from mfmab.harness import ExperimentPlan, load_plan_instance, run_sweep

ROOT = Path(__file__).resolve().parents[1]
PLANS = ("figure1a_plan.json", "figure1b_plan.json")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="runs/figure1")
    parser.add_argument("--trials", type=int, help="override the plan's trial count")
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    for name in PLANS:
        plan = ExperimentPlan.from_file(ROOT / "instances" / name)
        overrides = {"workers": args.workers}
        if args.trials:
            overrides["trials"] = args.trials
        plan = ExperimentPlan(**{**plan.__dict__, **overrides})
        spec = load_plan_instance(plan)
        _, summary = run_sweep(plan, Path(args.out) / Path(name).stem, spec=spec)

        print(f"\n{name}: K={spec.num_arms} M={spec.num_fidelities}, {plan.trials} trials")
        print(f"{'delta':>6} {'proc':>4} {'mean cost':>12} {'std':>10} {'success':>8} {'LB (simpl.)':>12}")
        for s in summary:
            lb = bai_lower_bound(spec, s.grid_param_value)[1]
            print(f"{s.grid_param_value:6.2f} {s.procedure:>4} {s.mean_cost:12.1f} {s.std_cost:10.1f} "
                  f"{s.success_rate:8.3f} {lb:12.1f}")


if __name__ == "__main__":
    main()
