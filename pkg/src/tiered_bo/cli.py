"""Command line entry point.

    tiered-bo run --problem tf1 --algo trace,mace --budget 50 --init 10 --runs 10 --seed 0 --out results/tf1
    tiered-bo run --problem my_circuit.toml --algo trace --budget 100 --init 20
    tiered-bo oracle --problem tf2 --resolution 501
    tiered-bo theorem1 --problem branin
"""

from __future__ import annotations

import argparse
import logging
import sys

from .bench import BENCHMARKS, boundary_augmented_grid, feasible_grid_oracle, theorem1_check
from .evaluator import ConfigError
from .harness import ExperimentConfig, execute_experiment, load_problem


def _algorithms(text: str) -> tuple[str, ...]:
    return tuple(a.strip().lower() for a in text.split(",") if a.strip())


def _cmd_run(args) -> int:
    cfg = ExperimentConfig(
        problem=load_problem(args.problem),
        algorithms=_algorithms(args.algo),
        budget=args.budget,
        init=args.init,
        num_runs=args.runs,
        base_seed=args.seed,
        output_dir=args.out,
        workers=args.workers,
    )
    result = execute_experiment(cfg)
    sys.stdout.write(result.table)
    if result.status:
        print("one or more runs aborted; see the per-run JSON files for the error", file=sys.stderr)
    return result.status


def _cmd_oracle(args) -> int:
    p = BENCHMARKS[args.problem]
    mask, best = feasible_grid_oracle(p, args.resolution)
    print(f"problem {p.name}: {int(mask.sum())}/{mask.size} feasible grid points")
    print("best feasible: -" if best is None else f"best feasible: {best:.6f}")
    return 0


def _cmd_theorem1(args) -> int:
    p = BENCHMARKS[args.problem]
    ok = theorem1_check(p, boundary_augmented_grid(p, args.resolution))
    print(f"theorem1 {p.name}: {'holds' if ok else 'VIOLATED'}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tiered-bo", description="Tiered-ensemble constrained Bayesian optimization.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="repeated optimization runs with result files")
    r.add_argument("--problem", required=True, help="benchmark name or evaluator .toml file")
    r.add_argument("--algo", default="trace", help="comma-separated subset of trace,mace,eipf,pipf,pso")
    r.add_argument("--budget", type=int, default=50)
    r.add_argument("--init", type=int, default=10)
    r.add_argument("--runs", type=int, default=10)
    r.add_argument("--seed", type=int, default=0, help="run k uses seed + k")
    r.add_argument("--out", default="results")
    r.add_argument("--workers", type=int, default=None, help="process pool size (default: CPU count)")
    r.set_defaults(func=_cmd_run)

    o = sub.add_parser("oracle", help="brute-force grid optimum of a benchmark")
    o.add_argument("--problem", required=True, choices=sorted(BENCHMARKS))
    o.add_argument("--resolution", type=int, default=501)
    o.set_defaults(func=_cmd_oracle)

    t = sub.add_parser("theorem1", help="check feasible-dominance on a boundary-augmented grid")
    t.add_argument("--problem", required=True, choices=sorted(BENCHMARKS))
    t.add_argument("--resolution", type=int, default=101)
    t.set_defaults(func=_cmd_theorem1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
