"""Command-line entry point.

Exit codes: 0 success, 2 bad input, 3 invariant violation or failed suite.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Sequence

from .checks import InvariantViolation
from .engine import EngineError
from .generators import GeneratorSpec, parse_gen_spec
from .model import InstanceError, load_instance, serialize_instance
from .oracle import DEFAULT_BUDGET, bound_radius
from .potential import CapacityError
from .runner import POLICIES, read_trace, run_instance, write_trace
from .suites import SUITES, run_suite

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_VIOLATION = 3

SWEEP_COLUMNS = ("n", "m", "policy", "seed", "gain", "minDegree", "ratio", "r", "verdict", "kind", "edges")


class InputError(Exception):
    pass


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits, got {text}")
    return value


def _int_list(text: str) -> list[int]:
    out: list[int] = []
    for part in text.split(","):
        lo, dash, hi = part.partition("-")
        out.extend(range(int(lo), int(hi) + 1) if dash else [int(lo)])
    return out


def _dump(obj: dict, path: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=False)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _load_source(args: argparse.Namespace):
    try:
        if args.instance:
            return load_instance(args.instance)
        return parse_gen_spec(args.gen, args.seed).build()
    except OSError as exc:
        raise InputError(f"cannot read instance: {exc}") from exc
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def cmd_run(args: argparse.Namespace) -> int:
    instance = _load_source(args)
    replay = None
    if args.policy == "replay":
        if not args.replay_from:
            raise InputError("--policy replay needs --replay-from <trace>")
        try:
            replay = read_trace(args.replay_from)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read trace: {exc}") from exc
    result = run_instance(
        instance,
        args.policy,
        args.seed,
        check=args.check,
        exhaustive=args.exhaustive,
        replay=replay,
        timing=args.timing,
        opt_budget=args.opt_budget,
    )
    if args.trace:
        write_trace(result.trace, args.trace)
    _dump(result.report, args.report)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    names = SUITES if args.suite == "all" else (args.suite,)
    reports = [run_suite(name, quick=args.quick, seed=args.seed) for name in names]
    body = reports[0].to_json() if len(reports) == 1 else {"suites": [r.to_json() for r in reports]}
    _dump(body, args.report)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VIOLATION


def _sweep_row(job: tuple[GeneratorSpec, str, int, int]) -> dict:
    spec, policy, seed, budget = job
    instance = spec.build()
    rep = run_instance(instance, policy, seed, opt_budget=budget).report
    delta = rep["minDegree"]
    return {
        "n": spec.n,
        "m": spec.m,
        "policy": policy,
        "seed": seed,
        "gain": rep["gain"],
        "minDegree": delta,
        "ratio": rep["gain"] / delta if delta else "",
        "r": bound_radius(spec.n),
        "verdict": rep["competitiveVerdict"],
        "kind": spec.kind,
        "edges": instance.m,
    }


def sweep_jobs(args: argparse.Namespace) -> list[tuple[GeneratorSpec, str, int, int]]:
    jobs = []
    for n in args.n:
        for m in args.m:
            for seed in args.seeds:
                size = args.edge_size or max(1, n // 4)
                spec = GeneratorSpec(args.kind, n, m, edge_size=size if args.kind == "uniform" else 0, seed=seed)
                for policy in args.policies:
                    jobs.append((spec, policy, seed, args.opt_budget))
    return jobs


def cmd_sweep(args: argparse.Namespace) -> int:
    bad = [p for p in args.policies if p not in ("det", "rand", "greedy")]
    if bad:
        raise InputError(f"sweep policies must be det, rand or greedy, got {bad}")
    try:
        jobs = sweep_jobs(args)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    if args.workers == 1:
        rows = [_sweep_row(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_row, jobs))
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    try:
        instance = parse_gen_spec(args.gen, args.seed).build()
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    text = serialize_instance(instance)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="online-dsc", description="Online disjoint set cover experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="stream one instance through a policy")
    source = run.add_mutually_exclusive_group(required=True)
    source.add_argument("--instance", metavar="PATH")
    source.add_argument("--gen", metavar="SPEC", help="e.g. planted:n=8,covers=32")
    run.add_argument("--policy", choices=POLICIES, default="det")
    run.add_argument("--seed", type=_seed, default=0)
    run.add_argument("--check", action="store_true", help="assert per-step invariants")
    run.add_argument("--trace", metavar="PATH", help="write the decision trace as JSON lines")
    run.add_argument("--report", metavar="PATH", help="write the report here instead of stdout")
    run.add_argument("--exhaustive", action="store_true", help="price every candidate color")
    run.add_argument("--replay-from", metavar="PATH", help="trace to replay with --policy replay")
    run.add_argument("--timing", action="store_true", help="add wall time to the report")
    run.add_argument("--opt-budget", type=int, default=DEFAULT_BUDGET, metavar="EDGES")
    run.set_defaults(func=cmd_run)

    verify = sub.add_parser("verify", help="run a property suite")
    verify.add_argument("suite", choices=(*SUITES, "all"))
    verify.add_argument("--quick", action="store_true", help="smaller inputs")
    verify.add_argument("--seed", type=_seed, default=0)
    verify.add_argument("--report", metavar="PATH")
    verify.set_defaults(func=cmd_verify)

    sweep = sub.add_parser("sweep", help="grid of runs written as CSV")
    sweep.add_argument("--kind", choices=("planted", "uniform", "full", "starved"), default="planted")
    sweep.add_argument("--n", type=_int_list, default=[8, 16, 32])
    sweep.add_argument("--m", type=_int_list, default=[16, 64, 256], help="covers or edge counts")
    sweep.add_argument("--edge-size", type=int, default=0)
    sweep.add_argument("--policies", type=lambda s: s.split(","), default=["det", "rand", "greedy"])
    sweep.add_argument("--seeds", type=_int_list, default=[0], help="e.g. 0-49")
    sweep.add_argument("--workers", type=int, default=None)
    sweep.add_argument("--opt-budget", type=int, default=DEFAULT_BUDGET, metavar="EDGES")
    sweep.add_argument("--out", metavar="PATH")
    sweep.set_defaults(func=cmd_sweep)

    gen = sub.add_parser("gen", help="write a generated instance")
    gen.add_argument("--gen", metavar="SPEC", required=True)
    gen.add_argument("--seed", type=_seed, default=0)
    gen.add_argument("--out", metavar="PATH")
    gen.set_defaults(func=cmd_gen)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except InvariantViolation as exc:
        print(f"invariant violation at step {exc.step} ({exc.check}): {exc.detail}", file=sys.stderr)
        return EXIT_VIOLATION
    except (InputError, InstanceError, EngineError, CapacityError, ValueError, OverflowError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
