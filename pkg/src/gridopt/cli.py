"""Command line front end: gen, evaluate, optimize, bench."""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import baselines
from .alternating import AlterMilpConfig, run as altermilp_run
from .bench import (load_experiment, run_experiment, sweep_budget,
                    sweep_iterations)
from .environment import (GRID_PRESETS, GenerationConfig, generate,
                          load_environment, preset_config)
from .evaluator import evaluate
from .schedule import load_schedule


def _add_gen(sub):
    p = sub.add_parser("gen", help="generate a random environment file")
    p.add_argument("--preset", choices=sorted(GRID_PRESETS),
                   help="named grid size supplying default dimensions")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output environment JSON path")
    p.add_argument("--num-jobs", type=int)
    p.add_argument("--num-objects", type=int)
    p.add_argument("--num-cns", type=int)
    p.add_argument("--num-local-sns", type=int)
    p.add_argument("--num-remote-sns", type=int)
    p.add_argument("--object-size-range", type=float, nargs=2,
                   metavar=("LO", "HI"), help="object size range in KB")
    p.add_argument("--wan-bandwidth-range", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--lan-bandwidth-range", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--cn-speed-range", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--gamma", type=float)
    p.add_argument("--zipf-exponent", type=float)
    p.add_argument("--objects-per-job", type=int, nargs=2, metavar=("LO", "HI"))


def _cmd_gen(args) -> int:
    overrides = {}
    for flag, key in (
        ("num_jobs", "num_jobs"), ("num_objects", "num_objects"),
        ("num_cns", "num_cns"), ("num_local_sns", "num_local_sns"),
        ("num_remote_sns", "num_remote_sns"),
        ("object_size_range", "object_size_range_kb"),
        ("wan_bandwidth_range", "wan_bandwidth_range"),
        ("lan_bandwidth_range", "lan_bandwidth_range"),
        ("cn_speed_range", "cn_speed_range"), ("gamma", "gamma"),
        ("zipf_exponent", "zipf_exponent"),
        ("objects_per_job", "objects_per_job"),
    ):
        value = getattr(args, flag)
        if value is not None:
            overrides[key] = tuple(value) if isinstance(value, list) else value
    if args.preset is not None:
        config = preset_config(args.preset, seed=args.seed, **overrides)
    else:
        needed = ("num_jobs", "num_objects", "num_cns", "num_local_sns",
                  "num_remote_sns")
        missing = [n for n in needed if n not in overrides]
        if missing:
            raise SystemExit(
                "without --preset, the dimensions must be given explicitly; "
                "missing: " + ", ".join("--" + n.replace("_", "-") for n in missing)
            )
        config = GenerationConfig(rng_seed=args.seed, **overrides)
    env = generate(config)
    env.save(args.out)
    print(json.dumps({
        "out": args.out,
        "jobs": env.num_jobs, "objects": env.num_objects,
        "cns": env.num_cns, "local_sns": env.num_local_sns,
        "remote_sns": env.num_remote_sns, "seed": args.seed,
    }))
    return 0


def _add_evaluate(sub):
    p = sub.add_parser("evaluate", help="replay a schedule and print its timings")
    p.add_argument("--env", required=True)
    p.add_argument("--schedule", required=True)


def _cmd_evaluate(args) -> int:
    env = load_environment(args.env)
    schedule = load_schedule(args.schedule)
    report = evaluate(env, schedule)
    print(json.dumps(report.to_document(), indent=2))
    return 0


def _add_optimize(sub):
    p = sub.add_parser("optimize", help="run one optimization method")
    p.add_argument("--env", required=True)
    p.add_argument("--method", required=True,
                   choices=["random", "mintrans", "minexe", "greedy",
                            "ensgreedy", "diana", "ga", "altermilp"])
    p.add_argument("--budget", type=float, default=3.0,
                   help="solver/wall budget in seconds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the resulting schedule JSON here")
    p.add_argument("--trace", help="write the optimization trace JSON here (altermilp)")
    p.add_argument("--backend", help="solver backend key (default: highs)")
    p.add_argument("--iters", type=int, default=3, help="altermilp iterations")
    p.add_argument("--budget-split", choices=["equal", "front-loaded"],
                   default="equal")
    p.add_argument("--no-early-stop", action="store_true",
                   help="always run all altermilp iterations")
    p.add_argument("--no-order-opt", action="store_true",
                   help="pin the job order in altermilp's second half-step")
    p.add_argument("--runs", type=int, help="ensemble size for ensgreedy")
    p.add_argument("--threshold", type=float, default=1.0, help="diana ratio threshold")
    p.add_argument("--population", type=int, default=50, help="ga population")
    p.add_argument("--generations", type=int, help="ga generation cap")
    p.add_argument("--mutation-rate", type=float, help="ga per-gene mutation rate")


def _cmd_optimize(args) -> int:
    env = load_environment(args.env)
    start = time.perf_counter()
    trace = None
    if args.method == "altermilp":
        cfg = AlterMilpConfig(
            iterations=args.iters,
            total_budget=args.budget,
            budget_split=args.budget_split,
            seed=args.seed,
            backend=args.backend,
            optimize_order=not args.no_order_opt,
            early_stop=not args.no_early_stop,
        )
        schedule, trace = altermilp_run(env, cfg)
        statuses = tuple(s.status for s in trace.steps if s.stage != "init")
        degraded = trace.degraded
    else:
        if args.method == "random":
            out = baselines.random_baseline(env, args.seed)
        elif args.method == "mintrans":
            out = baselines.min_trans(env, args.budget, args.seed, backend=args.backend)
        elif args.method == "minexe":
            out = baselines.min_exe(env, args.budget, args.seed, backend=args.backend)
        elif args.method == "greedy":
            out = baselines.greedy(env)
        elif args.method == "ensgreedy":
            out = baselines.ensemble_greedy(env, args.seed, runs=args.runs,
                                            budget=args.budget)
        elif args.method == "diana":
            out = baselines.diana(env, threshold=args.threshold)
        else:
            out = baselines.ga(env, baselines.GaConfig(
                population=args.population,
                generations=args.generations or 1_000_000,
                mutation_rate=args.mutation_rate,
                seed=args.seed,
                budget=args.budget,
            ))
        schedule, statuses, degraded = out.schedule, out.solver_statuses, out.degraded
    wall = time.perf_counter() - start
    makespan = evaluate(env, schedule).makespan
    if args.out:
        schedule.save(args.out)
    if args.trace and trace is not None:
        trace.save(args.trace)
    print(json.dumps({
        "method": args.method,
        "makespan": makespan,
        "wall_time_s": round(wall, 6),
        "solver_statuses": list(statuses),
        "degraded": degraded,
        "schedule_file": args.out,
        "trace_file": args.trace if trace is not None else None,
    }))
    return 0


def _add_bench(sub):
    p = sub.add_parser("bench", help="run a benchmark experiment from a config file")
    p.add_argument("action", nargs="?", default="run",
                   choices=["run", "sweep-budget", "sweep-iters"])
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--budgets", help="comma-separated budgets for sweep-budget")
    p.add_argument("--ts", help="comma-separated iteration counts for sweep-iters")
    p.add_argument("--mode", choices=["divided", "same"],
                   help="sweep-iters: fixed total budget vs fixed per-iteration budget")


def _cmd_bench(args) -> int:
    config = load_experiment(args.config)
    if args.action == "run":
        result = run_experiment(config, out_dir=args.out)
    elif args.action == "sweep-budget":
        if not args.budgets:
            raise SystemExit("sweep-budget requires --budgets")
        budgets = [float(b) for b in args.budgets.split(",")]
        result = sweep_budget(config, budgets, out_dir=args.out)
    else:
        if not args.ts or not args.mode:
            raise SystemExit("sweep-iters requires --ts and --mode")
        ts = [int(t) for t in args.ts.split(",")]
        result = sweep_iterations(config, ts, args.mode, out_dir=args.out)
    summary = {
        "rows": len(result.rows),
        "failed": sum(1 for r in result.rows if r.status == "failed"),
        "output_dir": str(result.output_dir) if result.output_dir else None,
        "aggregate": [
            {"method": a.method, "budget": a.budget, "iterations": a.iterations,
             "mean_makespan": a.mean_makespan, "rank": a.rank}
            for a in result.aggregates
        ],
    }
    print(json.dumps(summary, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridopt",
        description="Joint job scheduling and data allocation on simulated grids",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_gen(sub)
    _add_evaluate(sub)
    _add_optimize(sub)
    _add_bench(sub)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    commands = {
        "gen": _cmd_gen,
        "evaluate": _cmd_evaluate,
        "optimize": _cmd_optimize,
        "bench": _cmd_bench,
    }
    try:
        return commands[args.command](args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
