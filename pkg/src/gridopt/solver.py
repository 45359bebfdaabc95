"""Solving models under wall-clock budgets, plus small-instance enumeration.

The solve wrapper owns two guarantees the backends do not give on their own:

* any solution crossing the wrapper is re-checked against the model before
  it is trusted, and
* a validated warm start can only help: the wrapper returns the better of
  the backend's incumbent and the warm start, so an anytime caller never
  regresses by solving.
"""

from __future__ import annotations

import itertools
import logging
import math
import os
import time
from dataclasses import dataclass

import numpy as np
import scipy.optimize
import scipy.sparse

from .environment import GridEnvironment
from .evaluator import makespan_of
from .model import MilpModel
from .schedule import Schedule

log = logging.getLogger(__name__)

# Backends get a little more than the requested budget so that model
# conversion and process overhead are not charged against tiny budgets; the
# reported wall time is still the truth.
GRACE_FRACTION = 0.1
GRACE_FLOOR = 0.25


@dataclass(frozen=True)
class SolveResult:
    """Outcome of one solve call.

    ``status`` is one of "optimal", "feasible-timeout", "infeasible",
    "error".  ``assignment`` maps every variable name to its value and is
    present exactly when status is "optimal" or "feasible-timeout".
    """

    status: str
    objective: float | None
    assignment: dict[str, float] | None
    wall_time: float
    diagnostics: str = ""

    @property
    def ok(self) -> bool:
        return self.status in ("optimal", "feasible-timeout")


class HighsBackend:
    """HiGHS via scipy's milp bindings."""

    name = "highs"

    def solve_raw(self, model: MilpModel, budget: float):
        """Return (x or None, raw_status, message) without postprocessing."""
        n = model.num_vars
        a = scipy.sparse.csr_matrix(
            (model.data, model.indices, model.indptr),
            shape=(model.num_rows, n),
        )
        res = scipy.optimize.milp(
            c=model.objective,
            constraints=scipy.optimize.LinearConstraint(a, model.row_lower, model.row_upper),
            bounds=scipy.optimize.Bounds(model.lower, model.upper),
            integrality=model.integer.astype(np.int64),
            options={
                "time_limit": budget,
                "mip_rel_gap": 0.0,  # never accept a suboptimal proof
                "presolve": True,
            },
        )
        x = res.x if res.x is not None else None
        if res.status == 0:
            raw = "optimal"
        elif res.status == 1:
            raw = "limit"
        elif res.status == 2:
            raw = "infeasible"
        else:
            raw = f"failed({res.status})"
        return x, raw, str(res.message)


_BACKENDS = {"highs": HighsBackend}


def get_backend(name: str | None = None):
    """Backend instance by name, or from GRIDOPT_BACKEND, default highs."""
    key = name or os.environ.get("GRIDOPT_BACKEND", "highs")
    try:
        return _BACKENDS[key]()
    except KeyError:
        known = ", ".join(sorted(_BACKENDS))
        raise KeyError(f"unknown solver backend {key!r}; known: {known}") from None


def register_backend(name: str, factory) -> None:
    _BACKENDS[name] = factory


def solve(model: MilpModel, budget: float, backend=None) -> SolveResult:
    """Solve ``model`` within ``budget`` seconds of backend time.

    The backend is granted the budget plus a small grace allowance
    (GRACE_FRACTION of the budget, at least GRACE_FLOOR seconds) to absorb
    conversion overhead.  Every candidate solution, backend or warm start,
    is validated against the model; invalid ones are dropped with a note in
    ``diagnostics``.
    """
    if not (math.isfinite(budget) and budget > 0):
        raise ValueError(f"budget must be a positive number of seconds, got {budget!r}")
    if backend is None or isinstance(backend, str):
        backend = get_backend(backend)

    notes = []
    warm_x = None
    warm_obj = None
    if model.warm_start is not None:
        warm_x = model.vector_from(model.warm_start)
        bad = model.check_assignment(warm_x)
        if bad:
            notes.append("warm start rejected: " + "; ".join(bad[:3]))
            warm_x = None
        else:
            warm_obj = model.objective_value(warm_x)

    start = time.perf_counter()
    try:
        x, raw, message = backend.solve_raw(
            model, budget + max(GRACE_FRACTION * budget, GRACE_FLOOR)
        )
    except Exception as exc:  # backend blew up; the warm start may still save us
        x, raw, message = None, "crashed", repr(exc)
        log.warning("backend %s crashed: %r", backend.name, exc)
    wall = time.perf_counter() - start

    incumbent = None
    inc_obj = None
    if x is not None:
        x = np.asarray(x, dtype=np.float64)
        rounded = x.copy()
        ints = model.integer
        rounded[ints] = np.round(rounded[ints])
        bad = model.check_assignment(rounded)
        if bad:
            notes.append("backend solution rejected: " + "; ".join(bad[:3]))
            if raw == "optimal":
                raw = "limit"  # the proof is void if the point does not check out
        else:
            incumbent = rounded
            inc_obj = model.objective_value(rounded)

    # keep whichever of backend incumbent / warm start is better
    use_warm = warm_x is not None and (inc_obj is None or warm_obj < inc_obj - 1e-12)
    if use_warm and inc_obj is not None:
        notes.append("warm start beat the backend incumbent; kept the warm start")
    if use_warm:
        incumbent, inc_obj = warm_x, warm_obj

    def pack(values):
        return dict(zip(model.names, (float(val) for val in values)))

    if raw == "optimal":
        if use_warm:
            # a warm start strictly better than a claimed optimum means the
            # proof cannot be trusted
            return SolveResult("feasible-timeout", inc_obj, pack(incumbent), wall,
                               "; ".join(notes) or message)
        return SolveResult("optimal", inc_obj, pack(incumbent), wall,
                           "; ".join(notes))
    if raw == "infeasible":
        if warm_x is not None:
            notes.append("backend reported infeasible but the warm start is feasible")
            return SolveResult("error", warm_obj, pack(warm_x), wall, "; ".join(notes))
        return SolveResult("infeasible", None, None, wall, message)
    # limit / crashed / failed
    if incumbent is not None:
        return SolveResult("feasible-timeout", inc_obj, pack(incumbent), wall,
                           "; ".join(notes) or message)
    return SolveResult("error", None, None, wall,
                       "; ".join(notes + [f"no incumbent ({raw}): {message}"]))


# -- exhaustive search --------------------------------------------------------


class InstanceTooLargeError(ValueError):
    def __init__(self, count, limit):
        super().__init__(
            f"exhaustive search over {count} candidates exceeds the limit of {limit}"
        )
        self.count = count
        self.limit = limit


def candidate_count(env: GridEnvironment) -> int:
    """Size of the full (assignment, order, placement) search space."""
    return (env.num_cns ** env.num_jobs
            * math.factorial(env.num_jobs)
            * env.num_local_sns ** env.num_objects)


def brute_force_optimal(env: GridEnvironment, max_candidates: int = 2_000_000
                        ) -> tuple[Schedule, float]:
    """Exact optimum by enumeration; refuses instances beyond ``max_candidates``.

    Ties break lexicographically on (job_cn, order, object_sn) so the
    returned schedule is deterministic.
    """
    count = candidate_count(env)
    if count > max_candidates:
        raise InstanceTooLargeError(count, max_candidates)

    nj, nc, nd, nl = env.num_jobs, env.num_cns, env.num_objects, env.num_local_sns
    best = math.inf
    best_tuple = None
    for cn_pick in itertools.product(range(nc), repeat=nj):
        job_cn = np.array(cn_pick, dtype=np.int64)
        for order_pick in itertools.permutations(range(nj)):
            order = np.array(order_pick, dtype=np.int64)
            for sn_pick in itertools.product(range(nl), repeat=nd):
                schedule = Schedule(job_cn=job_cn, order=order,
                                    object_sn=np.array(sn_pick, dtype=np.int64))
                makespan = makespan_of(env, schedule)
                if makespan < best:
                    best = makespan
                    best_tuple = (cn_pick, order_pick, sn_pick)
    cn_pick, order_pick, sn_pick = best_tuple
    winner = Schedule(
        job_cn=np.array(cn_pick, dtype=np.int64),
        order=np.array(order_pick, dtype=np.int64),
        object_sn=np.array(sn_pick, dtype=np.int64),
    )
    return winner, best
