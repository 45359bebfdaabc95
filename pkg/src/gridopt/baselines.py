"""Reference methods the alternating optimizer is compared against.

Three families: no optimization (random), one-sided MILP restrictions
(min-transfer, min-execution), and classic heuristics (greedy and its
randomized ensemble, intensity-based two-way classification, a genetic
algorithm over the full decision encoding).

Every method returns a :class:`BaselineRun` whose schedule is validated and
whose ``degraded`` flag records solver failures instead of raising, so a
benchmark sweep never dies halfway through.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .environment import GridEnvironment
from .evaluator import makespan_of
from .model import build_fixed_x, build_fixed_yz, extract_schedule
from .schedule import Schedule, random_schedule
from .solver import solve


@dataclass(frozen=True)
class BaselineRun:
    schedule: Schedule
    makespan: float
    solver_statuses: tuple[str, ...] = ()
    degraded: bool = False
    extra: dict = field(default_factory=dict)


def _finish(env, schedule, statuses=(), degraded=False, **extra) -> BaselineRun:
    schedule.validate(env)
    return BaselineRun(
        schedule=schedule,
        makespan=makespan_of(env, schedule),
        solver_statuses=tuple(statuses),
        degraded=degraded,
        extra=extra,
    )


def random_baseline(env: GridEnvironment, seed) -> BaselineRun:
    """Uniform random schedule, no optimization at all."""
    return _finish(env, random_schedule(env, seed))


def min_trans(env: GridEnvironment, budget: float, seed, backend=None) -> BaselineRun:
    """Keep a random assignment and order; optimize only the data placement."""
    init = random_schedule(env, seed)
    mdl = build_fixed_x(env, init.job_cn, warm_order=init.order,
                        warm_object_sn=init.object_sn, fix_order=init.order)
    res = solve(mdl, budget, backend=backend)
    if not res.ok:
        return _finish(env, init, statuses=(res.status,), degraded=True)
    return _finish(env, extract_schedule(env, res.assignment), statuses=(res.status,))


def min_exe(env: GridEnvironment, budget: float, seed, backend=None) -> BaselineRun:
    """Keep a random order and placement; optimize only the job assignment."""
    init = random_schedule(env, seed)
    mdl = build_fixed_yz(env, init.order, init.object_sn, warm_cn=init.job_cn)
    res = solve(mdl, budget, backend=backend)
    if not res.ok:
        return _finish(env, init, statuses=(res.status,), degraded=True)
    return _finish(env, extract_schedule(env, res.assignment), statuses=(res.status,))


def greedy_data_assignment(env: GridEnvironment) -> np.ndarray:
    """Per-object placement minimizing replication plus mean LAN delay.

    The staging cost of object d on local SN l is approximated by
    remote_delay(d, l) + mean over CNs of local_delay(d, l, c); each object
    independently takes the arg-min (tie: lowest SN id).
    """
    rd = env.remote_delay_table()                                  # (D, L)
    mean_ld = (env.object_sizes[:, None, None]
               / env.lan_bandwidth[None, :, :]).mean(axis=2)       # (D, L)
    return np.argmin(rd + mean_ld, axis=1).astype(np.int64)


def greedy(env: GridEnvironment, order=None) -> BaselineRun:
    """First-come-first-served onto whichever CN frees up first.

    Jobs are visited in ``order`` (submission order by default); each takes
    the CN with the smallest current availability time, ties to the lowest
    CN id.  Placement comes from :func:`greedy_data_assignment`.
    """
    if order is None:
        order = np.arange(env.num_jobs, dtype=np.int64)
    else:
        order = np.asarray(order, dtype=np.int64)
    object_sn = greedy_data_assignment(env)
    t_remote = env.object_sizes / env.wan_bandwidth[env.hosting, object_sn]
    cn_free = np.zeros(env.num_cns)
    job_cn = np.zeros(env.num_jobs, dtype=np.int64)
    for j in order:
        c = int(np.argmin(cn_free))
        job_cn[j] = c
        start = cn_free[c]
        ready = start
        total = 0.0
        for d in env.job_inputs[j]:
            begin = max(start, t_remote[d])
            ready = max(ready, begin + env.object_sizes[d] / env.lan_bandwidth[object_sn[d], c])
            total += env.object_sizes[d]
        cn_free[c] = ready + env.gamma * total / env.cn_speeds[c]
    return _finish(env, Schedule(job_cn=job_cn, order=order, object_sn=object_sn))


def ensemble_greedy(env: GridEnvironment, seed, runs: int | None = None,
                    budget: float | None = None) -> BaselineRun:
    """Greedy under many random job orders; best run wins.

    ``runs`` fixes the ensemble size.  When omitted, runs keep going until
    ``budget`` seconds have elapsed, with a floor of 10; with neither given
    the size defaults to 50.
    """
    if runs is not None and runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    best: BaselineRun | None = None
    done = 0
    while True:
        order = rng.permutation(env.num_jobs)
        candidate = greedy(env, order=order)
        if best is None or candidate.makespan < best.makespan:
            best = candidate
        done += 1
        if runs is not None:
            if done >= runs:
                break
        elif budget is not None:
            if done >= 10 and time.perf_counter() - start >= budget:
                break
        elif done >= 50:
            break
    return BaselineRun(schedule=best.schedule, makespan=best.makespan,
                       extra={"runs": done})


def classify_jobs(env: GridEnvironment, object_sn, threshold: float) -> tuple[np.ndarray, np.ndarray]:
    """Intensity ratios and the compute-intensive mask used by :func:`diana`.

    ratio_j = best-case execution time / best-case total transfer time,
    where the transfer best case takes the given placement and the friendliest
    CN.  ratio >= threshold marks the job compute-intensive.
    """
    ld = env.object_sizes[:, None] / env.lan_bandwidth[object_sn, :]   # (D, C)
    rd = env.object_sizes / env.wan_bandwidth[env.hosting, object_sn]
    sizes = env.job_input_sizes()
    ratios = np.empty(env.num_jobs)
    for j, objs in enumerate(env.job_inputs):
        ids = list(objs)
        best_exec = env.gamma * sizes[j] / env.cn_speeds.max()
        best_transfer = (rd[ids].sum() + ld[ids].sum(axis=0)).min()
        ratios[j] = best_exec / best_transfer
    return ratios, ratios >= threshold


def diana(env: GridEnvironment, threshold: float = 1.0) -> BaselineRun:
    """Two-way job classification: chase CPUs or chase data.

    Compute-intensive jobs go to the CN with the lowest finish estimate
    (queue backlog plus own execution time); data-intensive jobs go to the
    CN that downloads their inputs fastest from the chosen placement.
    Placement is the greedy per-object rule, order is submission order.
    """
    if not (math.isfinite(threshold) and threshold > 0):
        raise ValueError(f"threshold must be positive, got {threshold}")
    object_sn = greedy_data_assignment(env)
    ratios, compute_heavy = classify_jobs(env, object_sn, threshold)
    exec_time = (env.gamma * env.job_input_sizes()[:, None]
                 / env.cn_speeds[None, :])                         # (J, C)
    ld = env.object_sizes[:, None] / env.lan_bandwidth[object_sn, :]  # (D, C)
    backlog = np.zeros(env.num_cns)
    job_cn = np.zeros(env.num_jobs, dtype=np.int64)
    for j in range(env.num_jobs):
        if compute_heavy[j]:
            c = int(np.argmin(backlog + exec_time[j]))
        else:
            c = int(np.argmin(ld[list(env.job_inputs[j])].sum(axis=0)))
        job_cn[j] = c
        backlog[c] += exec_time[j, c]
    schedule = Schedule(job_cn=job_cn, order=np.arange(env.num_jobs),
                        object_sn=object_sn)
    return _finish(env, schedule, ratios=ratios.tolist())


@dataclass(frozen=True)
class GaConfig:
    population: int = 50
    generations: int = 100
    tournament: int = 3
    mutation_rate: float | None = None   # None -> 1 / genome length
    elitism: int = 1
    seed: int = 0
    budget: float | None = None          # wall seconds; None -> generations only

    def __post_init__(self):
        if self.population < 2:
            raise ValueError(f"population must be >= 2, got {self.population}")
        if self.generations < 1:
            raise ValueError(f"generations must be >= 1, got {self.generations}")
        if not 1 <= self.tournament <= self.population:
            raise ValueError("tournament size must be in [1, population]")
        if self.mutation_rate is not None and not 0 <= self.mutation_rate <= 1:
            raise ValueError("mutation_rate must be in [0, 1]")
        if self.elitism < 0 or self.elitism >= self.population:
            raise ValueError("elitism must be in [0, population)")


def _order_crossover(rng, a, b):
    # classic OX: keep a slice of parent a, fill the rest in parent b's order
    n = a.size
    child = np.full(n, -1, dtype=np.int64)
    lo, hi = sorted(rng.choice(n + 1, size=2, replace=False))
    child[lo:hi] = a[lo:hi]
    taken = set(child[lo:hi].tolist())
    fill = [g for g in b if g not in taken]
    spots = [k for k in range(n) if not lo <= k < hi]
    for k, g in zip(spots, fill):
        child[k] = g
    return child


def ga(env: GridEnvironment, config: GaConfig | None = None, **overrides) -> BaselineRun:
    """Genetic search over (assignment, order, placement) triples.

    Tournament selection, one-point crossover on the index vectors, order
    crossover on the permutation, per-gene mutation, elitist survival.
    Stops at the generation cap or when the wall budget runs out, and
    returns the best individual ever evaluated.
    """
    if config is None:
        config = GaConfig(**overrides)
    elif overrides:
        raise TypeError("pass either a GaConfig or keyword overrides, not both")
    rng = np.random.default_rng(config.seed)
    nj, nc, nd, nl = env.num_jobs, env.num_cns, env.num_objects, env.num_local_sns
    genome_len = 2 * nj + nd
    mut = config.mutation_rate if config.mutation_rate is not None else 1.0 / genome_len

    def make_random():
        return (rng.integers(0, nc, size=nj),
                rng.permutation(nj),
                rng.integers(0, nl, size=nd))

    def fitness(ind):
        return makespan_of(env, Schedule(job_cn=ind[0], order=ind[1], object_sn=ind[2]))

    population = [make_random() for _ in range(config.population)]
    scores = np.array([fitness(ind) for ind in population])
    best_idx = int(scores.argmin())
    best, best_score = population[best_idx], float(scores[best_idx])
    history = [best_score]

    start = time.perf_counter()
    generations_done = 0
    for _ in range(config.generations - 1):
        if config.budget is not None and time.perf_counter() - start >= config.budget:
            break
        elite_ids = np.argsort(scores)[:config.elitism]
        nxt = [tuple(np.copy(g) for g in population[i]) for i in elite_ids]
        while len(nxt) < config.population:
            pa = population[min(rng.integers(0, config.population, size=config.tournament),
                                key=lambda i: scores[i])]
            pb = population[min(rng.integers(0, config.population, size=config.tournament),
                                key=lambda i: scores[i])]
            cut_cn = int(rng.integers(0, nj + 1))
            cn = np.concatenate([pa[0][:cut_cn], pb[0][cut_cn:]])
            order = _order_crossover(rng, pa[1], pb[1])
            cut_sn = int(rng.integers(0, nd + 1))
            sn = np.concatenate([pa[2][:cut_sn], pb[2][cut_sn:]])
            for k in np.flatnonzero(rng.random(nj) < mut):
                cn[k] = rng.integers(0, nc)
            for k in np.flatnonzero(rng.random(nj) < mut):
                other = int(rng.integers(0, nj))
                order[k], order[other] = order[other], order[k]
            for k in np.flatnonzero(rng.random(nd) < mut):
                sn[k] = rng.integers(0, nl)
            nxt.append((cn, order, sn))
        population = nxt
        scores = np.array([fitness(ind) for ind in population])
        generations_done += 1
        gen_best = int(scores.argmin())
        if scores[gen_best] < best_score:
            best, best_score = population[gen_best], float(scores[gen_best])
        history.append(best_score)

    schedule = Schedule(job_cn=best[0], order=best[1], object_sn=best[2])
    return _finish(env, schedule, generations=generations_done + 1,
                   history=history)
