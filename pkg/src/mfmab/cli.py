"""Command line interface.

Exit codes: 0 success, 1 invalid instance or plan, 2 runtime error.
Set ``MFMAB_LOG_LEVEL`` (e.g. DEBUG, INFO) to control log verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .bounds import bound_report
from .core import InstanceError, PriorMeans, canonical, load_instance, validate_instance
from .harness import (
    ExperimentPlan,
    fit_records,
    run_sweep,
    write_records,
)

log = logging.getLogger("mfmab")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _prior(args) -> PriorMeans | None:
    if args.mu1_tilde is None and args.mu2_tilde is None:
        return None
    if args.mu1_tilde is None or args.mu2_tilde is None:
        raise InstanceError("--mu1-tilde and --mu2-tilde must be given together")
    return PriorMeans(args.mu1_tilde, args.mu2_tilde)


def cmd_validate(args) -> int:
    outcome = validate_instance(load_instance(args.instance))
    for note in outcome.warnings:
        print(f"warning: {note}")
    blocking = outcome.blocking(args.allow_inconsistent)
    for v in outcome.violations:
        print(f"{'violation' if v in blocking else 'tolerated'}: {v}")
    if blocking:
        return EXIT_INVALID
    spec = outcome.spec
    print(f"ok: K={spec.num_arms} M={spec.num_fidelities} arm order={list(spec.arm_labels)}")
    return EXIT_OK


def cmd_bounds(args) -> int:
    spec = canonical(load_instance(args.instance), args.allow_inconsistent)
    rep = bound_report(spec, args.delta, _prior(args), args.L, args.budget, args.epsilon)
    print(json.dumps(rep.to_dict(), indent=2))
    return EXIT_OK


def _print_summary(summary) -> None:
    for s in summary:
        line = f"{s.procedure or s.mode} {s.grid_param_name}={s.grid_param_value:g}: cost {s.mean_cost:.6g} +- {s.std_cost:.3g}"
        if s.success_rate is not None:
            line += f", success {s.success_rate:.3f}"
        if s.mean_regret is not None:
            line += f", regret {s.mean_regret:.6g} +- {s.std_regret:.3g}"
        print(line)


def _write_out(records, out) -> None:
    out = Path(out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True)
    write_records(records, out)


def cmd_bai(args) -> int:
    plan = ExperimentPlan(
        mode="bai", instance=args.instance, trials=args.trials, master_seed=args.seed,
        grid=tuple(args.delta), procedures=(args.procedure.upper(),), prior=_prior(args),
        L=args.L, distribution=args.distribution, workers=args.workers, timing=args.timing,
        allow_inconsistent=args.allow_inconsistent,
    )
    records, summary = run_sweep(plan)
    _write_out(records, args.out)
    _print_summary(summary)
    return EXIT_OK


def cmd_regret(args) -> int:
    plan = ExperimentPlan(
        mode="regret", instance=args.instance, trials=args.trials, master_seed=args.seed,
        grid=tuple(args.budget), epsilon=args.epsilon, distribution=args.distribution,
        workers=args.workers, timing=args.timing, allow_inconsistent=args.allow_inconsistent,
    )
    records, summary = run_sweep(plan)
    _write_out(records, args.out)
    _print_summary(summary)
    if len(plan.grid) >= 3:
        fit = fit_records(records)
        print(f"log-log slope {fit.slope:.4f} (R^2 {fit.r_squared:.3f})")
    return EXIT_OK


def cmd_sweep(args) -> int:
    plan = ExperimentPlan.from_file(args.plan)
    if args.workers is not None:
        plan = ExperimentPlan(**{**plan.__dict__, "workers": args.workers})
    if plan.mode in ("bounds", "validate"):
        raise InstanceError(f"sweep supports modes 'bai' and 'regret', not {plan.mode!r}")
    records, summary = run_sweep(plan, args.out)
    _print_summary(summary)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mfmab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def instance_args(p):
        p.add_argument("--instance", required=True)
        p.add_argument("--allow-inconsistent", action="store_true",
                       help="tolerate means outside their fidelity's error bound")

    p = sub.add_parser("validate", help="check an instance file")
    instance_args(p)
    p.set_defaults(func=cmd_validate)

    def prior_args(p):
        p.add_argument("--mu1-tilde", type=float)
        p.add_argument("--mu2-tilde", type=float)

    def run_args(p):
        p.add_argument("--trials", type=int, default=100)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=True)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--distribution", choices=["bernoulli", "deterministic"])
        p.add_argument("--timing", action="store_true", help="fill wall_ms (makes output non-reproducible)")

    p = sub.add_parser("bounds", help="evaluate bound expressions")
    instance_args(p)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--budget", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--L", type=float)
    prior_args(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("bai", help="Monte-Carlo best arm identification")
    instance_args(p)
    p.add_argument("--procedure", choices=["a", "b", "c", "A", "B", "C"], required=True)
    p.add_argument("--delta", type=float, nargs="+", required=True)
    p.add_argument("--L", type=float)
    prior_args(p)
    run_args(p)
    p.set_defaults(func=cmd_bai)

    p = sub.add_parser("regret", help="Monte-Carlo regret minimization")
    instance_args(p)
    p.add_argument("--budget", type=float, nargs="+", required=True)
    p.add_argument("--epsilon", type=float)
    run_args(p)
    p.set_defaults(func=cmd_regret)

    p = sub.add_parser("sweep", help="run an experiment plan file")
    p.add_argument("--plan", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("MFMAB_LOG_LEVEL", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InstanceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        log.exception("run failed")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
