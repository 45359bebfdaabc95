"""Alternating MILP optimization of assignment vs order-and-placement.

One iteration solves two restricted models back to back, each warm-started
from the best point so far: first the job assignment under the current order
and placement, then the order and placement under the new assignment.  The
warm-start contract of :func:`gridopt.solver.solve` makes the replayed
makespan non-increasing across completed steps, so the loop is an anytime
algorithm: interrupting it after any step leaves a valid schedule no worse
than the initial one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .environment import GridEnvironment
from .evaluator import makespan_of
from .model import build_fixed_x, build_fixed_yz, extract_schedule
from .schedule import Schedule, random_schedule, schedule_from_document
from .solver import solve

TRACE_SCHEMA = "optimization-trace/1"


@dataclass(frozen=True)
class AlterMilpConfig:
    iterations: int = 3
    total_budget: float = 3.0       # seconds of solver time over all 2T solves
    budget_split: str = "equal"     # "equal" or "front-loaded"
    seed: int = 0
    backend: str | None = None
    optimize_order: bool = True     # False pins the order in the second half-step
    early_stop: bool = True
    early_stop_rel: float = 1e-9

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if not (math.isfinite(self.total_budget) and self.total_budget > 0):
            raise ValueError(f"total_budget must be positive, got {self.total_budget}")
        if self.budget_split not in ("equal", "front-loaded"):
            raise ValueError(f"unknown budget_split {self.budget_split!r}")

    def step_budgets(self) -> list[float]:
        """Per-solve budgets, 2 per iteration, summing to the total."""
        t = self.iterations
        if self.budget_split == "equal":
            per = [1.0] * t
        else:
            per = [0.5 ** k for k in range(t)]
        scale = self.total_budget / (2.0 * sum(per))
        out = []
        for w in per:
            out.extend((w * scale, w * scale))
        return out


@dataclass(frozen=True)
class TraceStep:
    iteration: int          # 0 for the initial point
    stage: str              # "init", "assignment" or "order-placement"
    status: str             # solver status, or "init"
    model_objective: float | None
    makespan: float         # replayed makespan of the iterate after this step
    wall_time: float
    schedule: Schedule

    def to_document(self) -> dict:
        return {
            "iteration": self.iteration,
            "stage": self.stage,
            "status": self.status,
            "model_objective": self.model_objective,
            "makespan": self.makespan,
            "wall_time": self.wall_time,
            "schedule": self.schedule.to_document(),
        }


@dataclass(frozen=True)
class OptimizationTrace:
    steps: tuple[TraceStep, ...]
    stop_reason: str        # "completed", "converged"
    degraded: bool          # True when not a single sub-solve succeeded

    def makespans(self) -> list[float]:
        return [s.makespan for s in self.steps]

    def best(self) -> TraceStep:
        return min(self.steps, key=lambda s: (s.makespan, s.iteration))

    def to_document(self) -> dict:
        return {
            "schema": TRACE_SCHEMA,
            "stop_reason": self.stop_reason,
            "degraded": self.degraded,
            "steps": [s.to_document() for s in self.steps],
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_document(), fh, indent=2)
            fh.write("\n")


def trace_from_document(doc: dict) -> OptimizationTrace:
    steps = tuple(
        TraceStep(
            iteration=s["iteration"],
            stage=s["stage"],
            status=s["status"],
            model_objective=s["model_objective"],
            makespan=s["makespan"],
            wall_time=s["wall_time"],
            schedule=schedule_from_document(s["schedule"]),
        )
        for s in doc["steps"]
    )
    return OptimizationTrace(steps=steps, stop_reason=doc["stop_reason"],
                             degraded=doc["degraded"])


def random_init(env: GridEnvironment, seed) -> Schedule:
    """Uniform random starting point, deterministic per seed."""
    return random_schedule(env, seed)


def run(env: GridEnvironment, config: AlterMilpConfig) -> tuple[Schedule, OptimizationTrace]:
    """Alternating optimization from a random start.

    A sub-solve that fails outright keeps the previous iterate for that
    half-step; the trace records the failure.  The returned schedule is the
    best iterate seen (under the warm-start contract that is also the last).
    """
    current = random_init(env, config.seed)
    current_mk = makespan_of(env, current)
    steps = [TraceStep(0, "init", "init", None, current_mk, 0.0, current)]
    budgets = config.step_budgets()
    any_success = False
    quiet_iterations = 0

    for it in range(1, config.iterations + 1):
        mk_before = current_mk
        for half, stage in enumerate(("assignment", "order-placement")):
            budget = budgets[2 * (it - 1) + half]
            if stage == "assignment":
                mdl = build_fixed_yz(env, current.order, current.object_sn,
                                     warm_cn=current.job_cn)
            else:
                mdl = build_fixed_x(
                    env, current.job_cn,
                    warm_order=current.order, warm_object_sn=current.object_sn,
                    fix_order=None if config.optimize_order else current.order,
                )
            res = solve(mdl, budget, backend=config.backend)
            if res.ok:
                any_success = True
                candidate = extract_schedule(env, res.assignment)
                candidate_mk = makespan_of(env, candidate)
                # extraction can only tighten timings, never worsen them
                if candidate_mk <= current_mk:
                    current, current_mk = candidate, candidate_mk
            steps.append(TraceStep(it, stage, res.status, res.objective,
                                   current_mk, res.wall_time, current))
        improvement = (mk_before - current_mk) / max(1.0, mk_before)
        quiet_iterations = quiet_iterations + 1 if improvement < config.early_stop_rel else 0
        if config.early_stop and quiet_iterations >= 2 and it < config.iterations:
            trace = OptimizationTrace(tuple(steps), "converged", not any_success)
            return current, trace

    trace = OptimizationTrace(tuple(steps), "completed", not any_success)
    return current, trace
