"""Benchmark harness: paired multi-seed comparisons, sweeps, persistence.

Every method in an experiment sees the identical environment per seed, so
comparisons are paired.  Results land in two comma-separated files with
fixed headers (see ROWS_HEADER and AGGREGATE_HEADER), the resolved config is
stored alongside as JSON, and each (method, seed) run leaves a short log.
A failed run never aborts the experiment; it is recorded with status
"failed" and excluded (but counted) in aggregates.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baselines
from .alternating import AlterMilpConfig, run as altermilp_run
from .environment import (DocumentError, GenerationConfig, GRID_PRESETS,
                          config_from_document, generate, preset_config)
from .evaluator import makespan_of

EXPERIMENT_SCHEMA = "experiment-config/1"

METHODS = ("random", "mintrans", "minexe", "greedy", "ensgreedy", "diana",
           "ga", "altermilp")

ROWS_HEADER = ["setup", "seed", "method", "makespan", "wall_time_s", "status",
               "solver_statuses", "rel_improvement_vs_random", "budget",
               "iterations"]

AGGREGATE_HEADER = ["setup", "method", "budget", "iterations", "n_rows",
                    "n_failed", "mean_makespan", "min_makespan",
                    "max_makespan", "mean_rel_improvement_vs_random",
                    "mean_wall_time_s", "rank"]


@dataclass(frozen=True)
class MethodSpec:
    """One benchmarked method: registry key, row label, extra parameters."""

    method: str
    label: str | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(
                f"unknown method {self.method!r}; known: {', '.join(METHODS)}"
            )

    @property
    def name(self) -> str:
        return self.label or self.method

    def to_document(self) -> dict:
        return {"method": self.method, "label": self.label, "params": dict(self.params)}


@dataclass(frozen=True)
class ExperimentConfig:
    """A full experiment: one environment setup, several methods and seeds.

    Exactly one of ``preset`` (a named grid size) and ``generation`` (an
    explicit GenerationConfig) must be given.  ``budget`` is the per-run
    solver/wall budget in seconds.  ``reproduction_mode`` disables the
    alternating optimizer's early stopping so that all iterations run.
    """

    methods: tuple[MethodSpec, ...]
    seeds: tuple[int, ...]
    budget: float
    preset: str | None = None
    generation: GenerationConfig | None = None
    reproduction_mode: bool = False
    parallelism: int = 1
    output_dir: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.methods:
            raise ValueError("an experiment needs at least one method")
        if not self.seeds:
            raise ValueError("an experiment needs at least one seed")
        if not self.budget > 0:
            raise ValueError(f"budget must be positive, got {self.budget}")
        if (self.preset is None) == (self.generation is None):
            raise ValueError("give exactly one of preset and generation")
        if self.preset is not None and self.preset not in GRID_PRESETS:
            raise ValueError(
                f"unknown preset {self.preset!r}; known: {sorted(GRID_PRESETS)}"
            )
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        labels = [m.name for m in self.methods]
        if len(set(labels)) != len(labels):
            raise ValueError("method labels must be unique within an experiment")

    @property
    def setup_name(self) -> str:
        return self.preset if self.preset is not None else "custom"

    def environment_for(self, seed: int):
        if self.preset is not None:
            return generate(preset_config(self.preset), seed=seed)
        return generate(self.generation, seed=seed)

    def to_document(self) -> dict:
        return {
            "schema": EXPERIMENT_SCHEMA,
            "preset": self.preset,
            "generation": None if self.generation is None
                          else self.generation.to_document(),
            "methods": [m.to_document() for m in self.methods],
            "seeds": list(self.seeds),
            "budget": self.budget,
            "reproduction_mode": self.reproduction_mode,
            "parallelism": self.parallelism,
            "output_dir": self.output_dir,
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_document(), fh, indent=2)
            fh.write("\n")


def experiment_from_document(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise DocumentError("experiment document must be a JSON object")
    if doc.get("schema") != EXPERIMENT_SCHEMA:
        raise DocumentError(
            f"field 'schema': expected {EXPERIMENT_SCHEMA!r}, got {doc.get('schema')!r}"
        )
    for name in ("methods", "seeds", "budget"):
        if name not in doc:
            raise DocumentError(f"missing field: {name}")
    try:
        methods = tuple(
            MethodSpec(method=m["method"], label=m.get("label"),
                       params=dict(m.get("params") or {}))
            for m in doc["methods"]
        )
        generation = doc.get("generation")
        return ExperimentConfig(
            methods=methods,
            seeds=tuple(doc["seeds"]),
            budget=float(doc["budget"]),
            preset=doc.get("preset"),
            generation=None if generation is None else config_from_document(generation),
            reproduction_mode=bool(doc.get("reproduction_mode", False)),
            parallelism=int(doc.get("parallelism", 1)),
            output_dir=doc.get("output_dir"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DocumentError):
            raise
        raise DocumentError(f"experiment document rejected: {exc}") from exc


def load_experiment(path) -> ExperimentConfig:
    with open(path) as fh:
        return experiment_from_document(json.load(fh))


@dataclass(frozen=True)
class ResultRow:
    setup: str
    seed: int
    method: str
    makespan: float | None
    wall_time: float
    status: str                      # "ok", "degraded" or "failed"
    solver_statuses: tuple[str, ...]
    rel_improvement: float | None    # (random - m) / random, positive = better
    budget: float
    iterations: int | None
    log: str = ""

    def as_csv(self) -> list:
        return [
            self.setup, self.seed, self.method,
            "" if self.makespan is None else repr(self.makespan),
            f"{self.wall_time:.6f}", self.status,
            "|".join(self.solver_statuses),
            "" if self.rel_improvement is None else repr(self.rel_improvement),
            repr(self.budget),
            "" if self.iterations is None else self.iterations,
        ]


@dataclass(frozen=True)
class AggregateRow:
    setup: str
    method: str
    budget: float
    iterations: int | None
    n_rows: int
    n_failed: int
    mean_makespan: float | None
    min_makespan: float | None
    max_makespan: float | None
    mean_rel_improvement: float | None
    mean_wall_time: float
    rank: float | None

    def as_csv(self) -> list:
        def opt(x):
            return "" if x is None else repr(x)
        return [self.setup, self.method, repr(self.budget),
                "" if self.iterations is None else self.iterations,
                self.n_rows, self.n_failed, opt(self.mean_makespan),
                opt(self.min_makespan), opt(self.max_makespan),
                opt(self.mean_rel_improvement), f"{self.mean_wall_time:.6f}",
                opt(self.rank)]


@dataclass
class ExperimentResult:
    rows: list[ResultRow]
    aggregates: list[AggregateRow]
    output_dir: Path | None = None


def run_method(env, spec: MethodSpec, seed: int, budget: float,
               reproduction_mode: bool = False):
    """Dispatch one method run; returns (schedule, statuses, degraded, log)."""
    p = dict(spec.params)
    backend = p.pop("backend", None)
    if spec.method == "random":
        out = baselines.random_baseline(env, seed)
    elif spec.method == "mintrans":
        out = baselines.min_trans(env, budget, seed, backend=backend)
    elif spec.method == "minexe":
        out = baselines.min_exe(env, budget, seed, backend=backend)
    elif spec.method == "greedy":
        out = baselines.greedy(env)
    elif spec.method == "ensgreedy":
        out = baselines.ensemble_greedy(env, seed, runs=p.pop("runs", None),
                                        budget=budget)
    elif spec.method == "diana":
        out = baselines.diana(env, threshold=p.pop("threshold", 1.0))
    elif spec.method == "ga":
        cfg = baselines.GaConfig(
            population=p.pop("population", 50),
            generations=p.pop("generations", 1_000_000),
            tournament=p.pop("tournament", 3),
            mutation_rate=p.pop("mutation_rate", None),
            elitism=p.pop("elitism", 1),
            seed=seed,
            budget=budget,
        )
        out = baselines.ga(env, cfg)
    elif spec.method == "altermilp":
        cfg = AlterMilpConfig(
            iterations=p.pop("iterations", 3),
            total_budget=budget,
            budget_split=p.pop("budget_split", "equal"),
            seed=seed,
            backend=backend,
            optimize_order=p.pop("optimize_order", True),
            early_stop=p.pop("early_stop", True) and not reproduction_mode,
        )
        schedule, trace = altermilp_run(env, cfg)
        statuses = tuple(s.status for s in trace.steps if s.stage != "init")
        log = "\n".join(
            f"iter {s.iteration} {s.stage}: status={s.status} "
            f"makespan={s.makespan!r} wall={s.wall_time:.3f}s"
            for s in trace.steps
        ) + f"\nstop_reason={trace.stop_reason}"
        return schedule, statuses, trace.degraded, log
    else:  # pragma: no cover - MethodSpec validation blocks this
        raise ValueError(f"unknown method {spec.method!r}")
    log = f"statuses={out.solver_statuses} degraded={out.degraded}"
    if out.extra:
        log += f" extra={json.dumps({k: v for k, v in out.extra.items() if k != 'history'})}"
    return out.schedule, out.solver_statuses, out.degraded, log


def _execute_item(payload):
    """One (method, seed) work item; module-level so pools can pickle it."""
    (config_doc, seed, spec_doc, budget, iterations_label) = payload
    config = experiment_from_document(config_doc)
    spec = MethodSpec(method=spec_doc["method"], label=spec_doc.get("label"),
                      params=dict(spec_doc.get("params") or {}))
    env = config.environment_for(seed)
    random_ref = baselines.random_baseline(env, seed).makespan
    start = time.perf_counter()
    try:
        schedule, statuses, degraded, log = run_method(
            env, spec, seed, budget, config.reproduction_mode)
        wall = time.perf_counter() - start
        makespan = makespan_of(env, schedule)
        rel = (random_ref - makespan) / random_ref
        status = "degraded" if degraded else "ok"
    except Exception as exc:
        wall = time.perf_counter() - start
        return ResultRow(config.setup_name, seed, spec.name, None, wall,
                         "failed", (), None, budget, iterations_label,
                         log=f"failed: {exc!r}")
    return ResultRow(config.setup_name, seed, spec.name, makespan, wall,
                     status, statuses, rel, budget, iterations_label, log=log)


def _iterations_label(spec: MethodSpec) -> int | None:
    if spec.method == "altermilp":
        return int(spec.params.get("iterations", 3))
    return None


def _run_items(config: ExperimentConfig, payloads):
    if config.parallelism > 1:
        with ProcessPoolExecutor(max_workers=config.parallelism) as pool:
            return list(pool.map(_execute_item, payloads))
    return [_execute_item(p) for p in payloads]


def aggregate_rows(rows) -> list[AggregateRow]:
    """Collapse raw rows into per-(setup, method, budget, iterations) stats.

    Rank is assigned within each (setup, budget) group by ascending mean
    makespan, ties sharing the average rank; groups whose rows all failed
    get no rank.
    """
    groups: dict[tuple, list[ResultRow]] = {}
    for row in rows:
        groups.setdefault((row.setup, row.method, row.budget, row.iterations),
                          []).append(row)
    aggregates = []
    for (setup, method, budget, iterations), members in groups.items():
        good = [r.makespan for r in members if r.makespan is not None]
        rels = [r.rel_improvement for r in members if r.rel_improvement is not None]
        aggregates.append(AggregateRow(
            setup=setup, method=method, budget=budget, iterations=iterations,
            n_rows=len(members), n_failed=len(members) - len(good),
            mean_makespan=float(np.mean(good)) if good else None,
            min_makespan=float(np.min(good)) if good else None,
            max_makespan=float(np.max(good)) if good else None,
            mean_rel_improvement=float(np.mean(rels)) if rels else None,
            mean_wall_time=float(np.mean([r.wall_time for r in members])),
            rank=None,
        ))
    ranked = []
    by_cell: dict[tuple, list[AggregateRow]] = {}
    for agg in aggregates:
        by_cell.setdefault((agg.setup, agg.budget), []).append(agg)
    for cell in by_cell.values():
        means = {id(a): a.mean_makespan for a in cell}
        scored = [a for a in cell if means[id(a)] is not None]
        ranks = rank_by_value([a.mean_makespan for a in scored])
        rank_of = {id(a): r for a, r in zip(scored, ranks)}
        for a in cell:
            ranked.append(dataclasses.replace(a, rank=rank_of.get(id(a))))
    ranked.sort(key=lambda a: (a.setup, a.budget, a.iterations or 0,
                               a.mean_makespan if a.mean_makespan is not None
                               else float("inf")))
    return ranked


def rank_by_value(values) -> list[float]:
    """Competition ranks (1 = smallest), ties averaged."""
    order = np.argsort(values, kind="stable")
    ranks = [0.0] * len(values)
    i = 0
    values = list(values)
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        shared = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = shared
        i = j + 1
    return ranks


def average_ranks(tables: list[list[AggregateRow]]) -> dict[str, float]:
    """Mean rank per method across several experiments' aggregate tables."""
    seen: dict[str, list[float]] = {}
    for table in tables:
        for agg in table:
            if agg.rank is not None:
                seen.setdefault(agg.method, []).append(agg.rank)
    return {m: float(np.mean(r)) for m, r in sorted(seen.items())}


def _persist(config: ExperimentConfig, result: ExperimentResult,
             out_dir: Path | None) -> None:
    if out_dir is None:
        return
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "rows.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ROWS_HEADER)
        writer.writerows(r.as_csv() for r in result.rows)
    with open(out_dir / "aggregate.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGGREGATE_HEADER)
        writer.writerows(a.as_csv() for a in result.aggregates)
    config.save(out_dir / "config.json")
    logs = out_dir / "logs"
    logs.mkdir(exist_ok=True)
    for row in result.rows:
        name = f"{row.method}_seed{row.seed}"
        if row.iterations is not None:
            name += f"_T{row.iterations}"
        name += f"_B{row.budget:g}.log"
        with open(logs / name, "w") as fh:
            fh.write(f"setup={row.setup} method={row.method} seed={row.seed} "
                     f"budget={row.budget}\nstatus={row.status} "
                     f"makespan={row.makespan!r} wall={row.wall_time:.3f}s\n")
            if row.log:
                fh.write(row.log + "\n")
    result.output_dir = out_dir


def run_experiment(config: ExperimentConfig, out_dir=None) -> ExperimentResult:
    """All (seed, method) cells of one experiment, plus aggregates.

    ``out_dir`` (or ``config.output_dir``) receives rows.csv, aggregate.csv,
    config.json and per-run logs.  Deterministic given the config, except
    for wall times and budget-dependent method internals.
    """
    doc = config.to_document()
    payloads = [
        (doc, seed, spec.to_document(), config.budget, _iterations_label(spec))
        for seed in config.seeds
        for spec in config.methods
    ]
    rows = _run_items(config, payloads)
    result = ExperimentResult(rows=rows, aggregates=aggregate_rows(rows))
    target = out_dir if out_dir is not None else config.output_dir
    _persist(config, result, Path(target) if target else None)
    return result


def sweep_budget(config: ExperimentConfig, budgets, out_dir=None) -> ExperimentResult:
    """Rerun every method at each budget; rows carry their budget."""
    if not budgets:
        raise ValueError("budgets must be non-empty")
    doc = config.to_document()
    payloads = [
        (doc, seed, spec.to_document(), float(budget), _iterations_label(spec))
        for budget in budgets
        for seed in config.seeds
        for spec in config.methods
    ]
    rows = _run_items(config, payloads)
    result = ExperimentResult(rows=rows, aggregates=aggregate_rows(rows))
    target = out_dir if out_dir is not None else config.output_dir
    _persist(config, result, Path(target) if target else None)
    return result


def sweep_iterations(config: ExperimentConfig, ts, mode: str,
                     out_dir=None) -> ExperimentResult:
    """Iteration sweep for the alternating optimizer.

    mode "divided": config.budget is the fixed total, so more iterations
    mean less time per iteration.  mode "same": config.budget is the fixed
    per-iteration allowance, so the total grows linearly with T.  Specs for
    other methods run once per T with their usual budget (flat reference
    lines).
    """
    if mode not in ("divided", "same"):
        raise ValueError(f"mode must be 'divided' or 'same', got {mode!r}")
    if not ts or any(t < 1 for t in ts):
        raise ValueError("ts must be a non-empty list of positive iteration counts")
    doc = config.to_document()
    payloads = []
    for t in ts:
        for seed in config.seeds:
            for spec in config.methods:
                if spec.method != "altermilp":
                    continue
                params = dict(spec.params)
                params["iterations"] = int(t)
                spec_t = MethodSpec(spec.method, spec.label, params)
                budget = config.budget if mode == "divided" else config.budget * t
                payloads.append((doc, seed, spec_t.to_document(), budget, int(t)))
    # non-iterative methods give one flat reference row set, not one per T
    for seed in config.seeds:
        for spec in config.methods:
            if spec.method != "altermilp":
                payloads.append((doc, seed, spec.to_document(), config.budget,
                                 _iterations_label(spec)))
    rows = _run_items(config, payloads)
    result = ExperimentResult(rows=rows, aggregates=aggregate_rows(rows))
    target = out_dir if out_dir is not None else config.output_dir
    _persist(config, result, Path(target) if target else None)
    return result
