"""Exact makespan evaluation of a schedule on an environment.

Semantics of the replay: every object's replication to its chosen local SN
starts at time zero.  Jobs are visited in priority order; a job occupies its
CN from the moment the CN frees up (u), waits for all of its inputs to reach
the CN over the LAN (ready time v, each transfer starting no earlier than u
and no earlier than the object's replication finish), then computes for
``gamma * total input KB / cn speed`` seconds.  The makespan is the largest
completion time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import kernels
from .environment import GridEnvironment
from .schedule import Schedule

REPORT_SCHEMA = "makespan-report/1"


@dataclass(frozen=True)
class MakespanReport:
    """Per-job timings from one replay.  Arrays are indexed by job id."""

    makespan: float
    exec_start: np.ndarray      # u: CN became available to the job
    ready: np.ndarray           # v: all inputs arrived, execution begins
    exec_length: np.ndarray     # e: pure compute time
    replication_done: np.ndarray  # per object, WAN transfer finish time

    def completion_times(self) -> np.ndarray:
        return self.ready + self.exec_length

    def to_document(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "makespan": self.makespan,
            "exec_start": self.exec_start.tolist(),
            "ready": self.ready.tolist(),
            "exec_length": self.exec_length.tolist(),
            "replication_done": self.replication_done.tolist(),
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_document(), fh, indent=2)
            fh.write("\n")


def replay_arguments(env: GridEnvironment, schedule: Schedule) -> tuple:
    """Kernel argument tuple for (env, schedule), in kernel calling order."""
    obj_ids, obj_off = env.flat_inputs()
    t_remote = env.object_sizes / env.wan_bandwidth[env.hosting, schedule.object_sn]
    return (
        schedule.order,
        schedule.job_cn,
        obj_ids,
        obj_off,
        schedule.object_sn,
        t_remote,
        env.object_sizes,
        env.lan_bandwidth,
        env.cn_speeds,
        env.gamma,
    )


def evaluate(env: GridEnvironment, schedule: Schedule, validate: bool = True) -> MakespanReport:
    """Replay ``schedule`` on ``env`` and report exact per-job timings."""
    if validate:
        schedule.validate(env)
    args = replay_arguments(env, schedule)
    u, v, e, makespan = kernels.replay(*args)
    return MakespanReport(
        makespan=float(makespan),
        exec_start=u,
        ready=v,
        exec_length=e,
        replication_done=args[5],
    )


def makespan_of(env: GridEnvironment, schedule: Schedule) -> float:
    """Makespan only, no validation; for search loops."""
    return float(kernels.replay(*replay_arguments(env, schedule))[3])


def execution_time(env: GridEnvironment, job: int, cn: int) -> float:
    """Compute time of ``job`` on ``cn``: gamma * total input KB / speed."""
    env._check_index("job", job, env.num_jobs)
    env._check_index("CN", cn, env.num_cns)
    total = env.object_sizes[list(env.job_inputs[job])].sum()
    return float(env.gamma * total / env.cn_speeds[cn])


def compute_big_a(env: GridEnvironment) -> float:
    """Horizon constant: a strict upper bound on any achievable makespan.

    Any replay serializes, at worst, every job's slowest replication, its
    slowest LAN transfer and its slowest execution back to back, and even
    that sum never reaches this value, so constraints deactivated with it
    can never bind on a feasible point.
    """
    rd = env.remote_delay_table()           # (D, L)
    ld = env.object_sizes[:, None, None] / env.lan_bandwidth[None, :, :]  # (D, L, C)
    worst_rd = rd.max(axis=1)
    worst_ld = ld.max(axis=(1, 2))
    sizes_per_job = env.job_input_sizes()
    total = 0.0
    for j, objs in enumerate(env.job_inputs):
        ids = list(objs)
        total += worst_rd[ids].max()
        total += worst_ld[ids].max()
        total += env.gamma * sizes_per_job[j] / env.cn_speeds.min()
    return float(total) + 1.0
