"""Schedules: job-to-CN assignment, priority order, object-to-local-SN placement."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .environment import DocumentError, GridEnvironment

SCHEDULE_SCHEMA = "grid-schedule/1"


class InvalidScheduleError(ValueError):
    """A schedule is inconsistent with its environment."""


@dataclass(frozen=True)
class Schedule:
    """One complete decision: where jobs run, in what priority, where data goes.

    ``order`` lists job ids from highest to lowest priority and must be a
    permutation of all jobs.  The order is global; only the relative order of
    jobs sharing a CN affects the outcome.
    """

    job_cn: np.ndarray     # (J,) CN id per job
    order: np.ndarray      # (J,) job ids, highest priority first
    object_sn: np.ndarray  # (D,) local SN id per object

    def __post_init__(self):
        for name in ("job_cn", "order", "object_sn"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.job_cn.ndim != 1 or self.order.ndim != 1 or self.object_sn.ndim != 1:
            raise InvalidScheduleError("schedule fields must be 1-d")
        if self.order.shape != self.job_cn.shape:
            raise InvalidScheduleError("order and job_cn must both have one entry per job")

    def validate(self, env: GridEnvironment) -> None:
        """Raise :class:`InvalidScheduleError` unless consistent with ``env``."""
        if self.job_cn.size != env.num_jobs:
            raise InvalidScheduleError(
                f"job_cn has {self.job_cn.size} entries for {env.num_jobs} jobs"
            )
        if self.object_sn.size != env.num_objects:
            raise InvalidScheduleError(
                f"object_sn has {self.object_sn.size} entries for {env.num_objects} objects"
            )
        if np.any(self.job_cn < 0) or np.any(self.job_cn >= env.num_cns):
            raise InvalidScheduleError("job_cn contains an out-of-range CN id")
        if np.any(self.object_sn < 0) or np.any(self.object_sn >= env.num_local_sns):
            raise InvalidScheduleError("object_sn contains an out-of-range local SN id")
        if not np.array_equal(np.sort(self.order), np.arange(env.num_jobs)):
            raise InvalidScheduleError("order is not a permutation of all job ids")

    def positions(self) -> np.ndarray:
        """(J,) priority position of each job (0 = runs first on its queue)."""
        pos = np.empty_like(self.order)
        pos[self.order] = np.arange(self.order.size)
        return pos

    def precedence_matrix(self) -> np.ndarray:
        """Binary (J, J) matrix with 1 where row job precedes column job."""
        pos = self.positions()
        mat = (pos[:, None] < pos[None, :]).astype(np.int64)
        np.fill_diagonal(mat, 0)
        return mat

    def to_document(self) -> dict:
        return {
            "schema": SCHEDULE_SCHEMA,
            "job_cn": self.job_cn.tolist(),
            "order": self.order.tolist(),
            "object_sn": self.object_sn.tolist(),
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_document(), fh, indent=2)
            fh.write("\n")


def schedule_from_document(doc: dict) -> Schedule:
    if not isinstance(doc, dict):
        raise DocumentError("schedule document must be a JSON object")
    if doc.get("schema") != SCHEDULE_SCHEMA:
        raise DocumentError(
            f"field 'schema': expected {SCHEDULE_SCHEMA!r}, got {doc.get('schema')!r}"
        )
    missing = [name for name in ("job_cn", "order", "object_sn") if name not in doc]
    if missing:
        raise DocumentError("missing field(s): " + ", ".join(missing))
    try:
        return Schedule(
            job_cn=np.asarray(doc["job_cn"], dtype=np.int64),
            order=np.asarray(doc["order"], dtype=np.int64),
            object_sn=np.asarray(doc["object_sn"], dtype=np.int64),
        )
    except (TypeError, ValueError) as exc:
        raise DocumentError(f"schedule document rejected: {exc}") from exc


def load_schedule(path) -> Schedule:
    with open(path) as fh:
        return schedule_from_document(json.load(fh))


def random_schedule(env: GridEnvironment, rng) -> Schedule:
    """Uniform random schedule.  ``rng`` is a seed or a numpy Generator."""
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    return Schedule(
        job_cn=rng.integers(0, env.num_cns, size=env.num_jobs),
        order=rng.permutation(env.num_jobs),
        object_sn=rng.integers(0, env.num_local_sns, size=env.num_objects),
    )


def order_from_tournament(wins: np.ndarray, job_cn: np.ndarray) -> np.ndarray:
    """Canonical priority order from a pairwise-precedence matrix.

    ``wins[i, j] == 1`` means job i precedes job j.  Only entries between
    jobs on the same CN matter; there the relation must be a strict total
    order (anything a feasible ordering model can emit is, since ties and
    cycles are infeasible).  Jobs are ranked by within-CN wins, and slots
    between CNs are interleaved by job id, which makes the result
    deterministic.
    """
    job_cn = np.asarray(job_cn, dtype=np.int64)
    wins = np.asarray(wins)
    n = job_cn.size
    if wins.shape != (n, n):
        raise InvalidScheduleError(f"wins must be ({n}, {n}), got {wins.shape}")
    rank = np.zeros(n, dtype=np.int64)
    for cn in np.unique(job_cn):
        members = np.flatnonzero(job_cn == cn)
        inside = wins[np.ix_(members, members)]
        won = inside.sum(axis=1)
        rank[members] = members.size - 1 - won
    keys = sorted(range(n), key=lambda j: (rank[j], j))
    return np.asarray(keys, dtype=np.int64)
