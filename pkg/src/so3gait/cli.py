"""Command line entry point: ``so3gait run`` and ``so3gait plan``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

from .harness import ScenarioError, default_log_dir, emit_report, load_scenario, run_scenario, write_log
from .planners import PlanningFailure, plan_blocks, so3_plan
from .rotations import Rot3


def _quat(text: str) -> Rot3:
    try:
        parts = [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a quaternion: {text!r}") from None
    norm = math.sqrt(sum(v * v for v in parts))
    if len(parts) != 4 or not math.isfinite(norm) or norm < 1e-9:
        raise argparse.ArgumentTypeError(f"expected four numbers w,x,y,z (not all zero), got {text!r}")
    return Rot3(tuple(v / norm for v in parts))


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="so3gait", description="Finger-gaiting orientation planner and simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario file and print a benchmark report")
    run.add_argument("scenario", type=Path)
    run.add_argument("--seed", type=int, default=None, help="base seed (default: from the file)")
    run.add_argument("--reps", type=int, default=None, help="repetitions (default: from the file)")
    run.add_argument("--log-dir", type=Path, default=None, help="write one JSONL trajectory log per repetition")
    run.add_argument("--report", choices=("csv", "table"), default="table")

    plan = sub.add_parser("plan", help="plan once between two orientations and print the result")
    plan.add_argument("--start", type=_quat, required=True, help="start quaternion w,x,y,z")
    plan.add_argument("--goal", type=_quat, required=True, help="goal quaternion w,x,y,z")
    plan.add_argument("--rho", type=float, default=0.2, help="connection threshold (rad)")
    plan.add_argument("--sigma", type=float, default=math.radians(2.0), help="step size (rad)")
    return p


def _run(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    metrics, logs = run_scenario(scenario, seed=args.seed, repetitions=args.reps)
    log_dir = args.log_dir or default_log_dir()
    if log_dir is not None:
        stem = scenario.name or "scenario"
        for m, rec in zip(metrics, logs):
            write_log(rec, log_dir / f"{stem}-seed{m.seed}.jsonl")
    sys.stdout.write(emit_report(metrics, args.report))
    for m in metrics:
        if not m.success:
            reason = m.failure or f"final error {m.final_orientation_error:.2f} deg"
            print(f"seed {m.seed}: failed ({reason})", file=sys.stderr)
    return 0 if all(m.success for m in metrics) else 1


def _plan(args: argparse.Namespace) -> int:
    try:
        plan = so3_plan(args.start, args.goal, args.rho, args.sigma)
    except PlanningFailure as exc:
        print(f"planning failed: {exc}", file=sys.stderr)
        return 1
    psi, theta, phi = plan.decomposition
    out = {
        "psi": psi,
        "theta": theta,
        "phi": phi,
        "steps": len(plan),
        "blocks": [{"mode": m.value, "total": t} for m, t in plan_blocks(plan)],
    }
    print(json.dumps(out, indent=2))
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _run(args) if args.command == "run" else _plan(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
