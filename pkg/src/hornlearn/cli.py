"""Command-line front end: learn from a task file, generate benchmark task
files, and run benchmark suites."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import tomli

from .bench import (
    BenchmarkSpec,
    PUZZLES,
    evaluate,
    generate_benchmark,
    run_suite,
)
from .core import cost, render_program
from .interpreter import EvalLimits, render_atom
from .learner import LearnerInput, OPTIMAL_FOUND, learn_loop
from .taskfile import parse_task, render_task
from .bias import parse_metarules


def _bool(text: str) -> bool:
    if text.lower() in ("true", "1", "yes", "on"):
        return True
    if text.lower() in ("false", "0", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {text!r}")


def _add_learn_parser(sub):
    p = sub.add_parser("learn", help="learn a program from a task file")
    p.add_argument("taskfile", type=Path)
    p.add_argument("--metarules", type=Path, default=None)
    p.add_argument("--enable-pi", type=_bool, default=None)
    p.add_argument("--enable-recursion", type=_bool, default=None)
    p.add_argument("--max-vars", type=int, default=None)
    p.add_argument("--max-body", type=int, default=None)
    p.add_argument("--max-clauses", type=int, default=None)
    p.add_argument("--max-literals", type=int, default=None)
    p.add_argument("--eval-timeout", type=float, default=0.1)
    p.add_argument("--budget", type=float, default=120.0)
    p.add_argument("--stats", action="store_true")
    p.add_argument("--json", type=Path, default=None)


def _cmd_learn(args) -> int:
    task = parse_task(args.taskfile.read_text())
    bias = task.bias
    overrides = {}
    if args.enable_pi is not None:
        overrides["pi_enabled"] = args.enable_pi
    if args.enable_recursion is not None:
        overrides["recursion_enabled"] = args.enable_recursion
    if args.max_vars is not None:
        overrides["max_vars"] = args.max_vars
    if args.max_body is not None:
        overrides["max_body"] = args.max_body
    if args.max_clauses is not None:
        overrides["max_clauses"] = args.max_clauses
    if args.metarules is not None:
        overrides["metarules"] = parse_metarules(args.metarules.read_text())
    if overrides:
        bias = dataclasses.replace(bias, **overrides)

    inp = LearnerInput(
        kb=task.kb(),
        pos=task.pos,
        neg=task.neg,
        bias=bias,
        limits=EvalLimits(per_example_timeout=args.eval_timeout),
        max_literals=args.max_literals,
        wall_budget=args.budget,
    )
    result = learn_loop(inp, collect_constraints=args.stats)
    if result.status == OPTIMAL_FOUND:
        print("% optimal solution found "
              f"(cost {cost(result.solution)}, "
              f"{result.stats['wall_time']:.2f}s)")
        print(render_program(result.solution))
    else:
        print(f"% no solution: {result.status} "
              f"({result.stats['wall_time']:.2f}s)")

    if args.stats:
        print(f"% programs tested: {result.stats['programs_tested']}")
        print(f"% constraints learned: {result.stats['constraints_learned']}")
        gen_stats = result.stats["generator"]
        print(f"% yields per cost level: {gen_stats['yielded_per_cost']}")
        rendered = result.stats.get("constraints", [])
        for text in rendered[:20]:
            print(text)
        if len(rendered) > 20:
            print(f"% ... {len(rendered) - 20} more constraints")

    if args.json is not None:
        payload = {
            "status": result.status,
            "cost": result.cost,
            "solution": (
                render_program(result.solution) if result.solution else None
            ),
            "stats": {
                k: v for k, v in result.stats.items() if k != "constraints"
            },
        }
        args.json.write_text(json.dumps(payload, indent=2))
    return 0


def _add_gen_parser(sub):
    p = sub.add_parser("gen", help="generate a benchmark task file")
    p.add_argument("family", choices=("robot", "kth", "puzzle"))
    p.add_argument("param", help="k for robot/kth, puzzle name otherwise")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--test-out", type=Path, default=None,
                   help="also write the held-out test examples")


def _cmd_gen(args) -> int:
    param = args.param
    if args.family in ("robot", "kth"):
        param = int(param)
    elif param not in PUZZLES:
        print(f"unknown puzzle {param!r}; choose from {', '.join(PUZZLES)}",
              file=sys.stderr)
        return 2
    data = generate_benchmark(BenchmarkSpec(args.family, param, args.seed))
    args.out.write_text(render_task(data.task))
    if args.test_out is not None:
        lines = [f"pos( {render_atom(a)} )." for a in data.test_pos]
        lines += [f"neg( {render_atom(a)} )." for a in data.test_neg]
        args.test_out.write_text("\n".join(lines) + "\n")
    print(f"wrote {args.out}")
    return 0


def _add_bench_parser(sub):
    p = sub.add_parser("bench", help="run a benchmark suite from a TOML config")
    p.add_argument("config", type=Path)
    p.add_argument("--out", type=Path, required=True)


def _cmd_bench(args) -> int:
    with args.config.open("rb") as fh:
        config = tomli.load(fh)
    ok = run_suite(config, args.out)
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hornlearn",
        description="Learn minimal definite programs from examples, with "
                    "automatic predicate invention.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_learn_parser(sub)
    _add_gen_parser(sub)
    _add_bench_parser(sub)
    args = parser.parse_args(argv)
    if args.command == "learn":
        return _cmd_learn(args)
    if args.command == "gen":
        return _cmd_gen(args)
    return _cmd_bench(args)


if __name__ == "__main__":
    sys.exit(main())
