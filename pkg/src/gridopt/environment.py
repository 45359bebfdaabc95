"""Simulated grid environments: generation, validation, queries, persistence.

An environment couples compute nodes (CNs), local storage nodes (local SNs),
remote storage nodes (remote SNs) and data objects.  Every object lives on one
remote SN and must be replicated to exactly one local SN before jobs can read
it over the LAN.  Units are fixed across the package: sizes in KB, bandwidths
in KB/s, compute speeds in ops/s, gamma in ops/KB, all delays in seconds.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass

import numpy as np

ENVIRONMENT_SCHEMA = "grid-environment/1"

KB_PER_MB = 1024.0


class InvalidConfigError(ValueError):
    """A generation config violates one of its constraints."""


class InvalidEnvironmentError(ValueError):
    """An environment violates a structural invariant."""


class DocumentError(ValueError):
    """A serialized document is malformed or has the wrong schema tag."""


def _frozen(values, dtype):
    arr = np.ascontiguousarray(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GridEnvironment:
    """Immutable grid instance.

    Index convention: all entities are 0-based everywhere, including on-disk
    documents.  ``job_inputs[j]`` holds the ids of the objects job ``j``
    reads, sorted ascending, never empty.
    """

    object_sizes: np.ndarray      # (D,) KB
    hosting: np.ndarray           # (D,) remote SN id per object
    job_inputs: tuple[tuple[int, ...], ...]
    cn_speeds: np.ndarray         # (C,) ops/s
    wan_bandwidth: np.ndarray     # (R, L) KB/s, remote SN -> local SN
    lan_bandwidth: np.ndarray     # (L, C) KB/s, local SN -> CN
    gamma: float                  # ops per KB of input

    def __post_init__(self):
        object.__setattr__(self, "object_sizes", _frozen(self.object_sizes, np.float64))
        object.__setattr__(self, "hosting", _frozen(self.hosting, np.int64))
        object.__setattr__(self, "cn_speeds", _frozen(self.cn_speeds, np.float64))
        object.__setattr__(self, "wan_bandwidth", _frozen(self.wan_bandwidth, np.float64))
        object.__setattr__(self, "lan_bandwidth", _frozen(self.lan_bandwidth, np.float64))
        object.__setattr__(
            self,
            "job_inputs",
            tuple(tuple(int(d) for d in objs) for objs in self.job_inputs),
        )
        self._check()

    def _check(self):
        if self.object_sizes.ndim != 1 or self.object_sizes.size == 0:
            raise InvalidEnvironmentError("object_sizes must be a non-empty 1-d array")
        if self.cn_speeds.ndim != 1 or self.cn_speeds.size == 0:
            raise InvalidEnvironmentError("cn_speeds must be a non-empty 1-d array")
        if self.wan_bandwidth.ndim != 2 or self.lan_bandwidth.ndim != 2:
            raise InvalidEnvironmentError("bandwidth tables must be 2-d")
        if self.wan_bandwidth.shape[1] != self.lan_bandwidth.shape[0]:
            raise InvalidEnvironmentError(
                "wan_bandwidth has %d local SN columns but lan_bandwidth has %d rows"
                % (self.wan_bandwidth.shape[1], self.lan_bandwidth.shape[0])
            )
        if self.lan_bandwidth.shape[1] != self.cn_speeds.size:
            raise InvalidEnvironmentError(
                "lan_bandwidth has %d CN columns but there are %d CN speeds"
                % (self.lan_bandwidth.shape[1], self.cn_speeds.size)
            )
        if self.hosting.shape != self.object_sizes.shape:
            raise InvalidEnvironmentError("hosting must have one entry per object")
        for label, arr in (
            ("object_sizes", self.object_sizes),
            ("cn_speeds", self.cn_speeds),
            ("wan_bandwidth", self.wan_bandwidth),
            ("lan_bandwidth", self.lan_bandwidth),
        ):
            if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
                raise InvalidEnvironmentError(label + " must be finite and strictly positive")
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise InvalidEnvironmentError("gamma must be finite and strictly positive")
        if np.any(self.hosting < 0) or np.any(self.hosting >= self.num_remote_sns):
            raise InvalidEnvironmentError("hosting contains an out-of-range remote SN id")
        if len(self.job_inputs) == 0:
            raise InvalidEnvironmentError("there must be at least one job")
        for j, objs in enumerate(self.job_inputs):
            if len(objs) == 0:
                raise InvalidEnvironmentError(f"job {j} reads no objects")
            if len(set(objs)) != len(objs):
                raise InvalidEnvironmentError(f"job {j} lists a duplicate object")
            if any(d < 0 or d >= self.num_objects for d in objs):
                raise InvalidEnvironmentError(f"job {j} references an out-of-range object id")

    # -- dimensions ---------------------------------------------------------

    @property
    def num_objects(self) -> int:
        return self.object_sizes.size

    @property
    def num_jobs(self) -> int:
        return len(self.job_inputs)

    @property
    def num_cns(self) -> int:
        return self.cn_speeds.size

    @property
    def num_local_sns(self) -> int:
        return self.lan_bandwidth.shape[0]

    @property
    def num_remote_sns(self) -> int:
        return self.wan_bandwidth.shape[0]

    # -- delay queries ------------------------------------------------------

    def remote_delay(self, obj: int, local_sn: int) -> float:
        """Seconds to replicate ``obj`` from its host to ``local_sn``."""
        self._check_index("object", obj, self.num_objects)
        self._check_index("local SN", local_sn, self.num_local_sns)
        return float(self.object_sizes[obj] / self.wan_bandwidth[self.hosting[obj], local_sn])

    def local_delay(self, obj: int, local_sn: int, cn: int) -> float:
        """Seconds to move ``obj`` from ``local_sn`` to ``cn`` over the LAN."""
        self._check_index("object", obj, self.num_objects)
        self._check_index("local SN", local_sn, self.num_local_sns)
        self._check_index("CN", cn, self.num_cns)
        return float(self.object_sizes[obj] / self.lan_bandwidth[local_sn, cn])

    def remote_delay_table(self) -> np.ndarray:
        """(D, L) table of replication delays for every placement choice."""
        return self.object_sizes[:, None] / self.wan_bandwidth[self.hosting, :]

    def job_input_sizes(self) -> np.ndarray:
        """(J,) total KB read by each job."""
        return np.array(
            [self.object_sizes[list(objs)].sum() for objs in self.job_inputs]
        )

    def flat_inputs(self) -> tuple[np.ndarray, np.ndarray]:
        """Job inputs in CSR-ish form: (object ids, offsets of length J+1)."""
        ids = np.array(
            [d for objs in self.job_inputs for d in objs], dtype=np.int64
        )
        offsets = np.zeros(self.num_jobs + 1, dtype=np.int64)
        np.cumsum([len(objs) for objs in self.job_inputs], out=offsets[1:])
        return ids, offsets

    @staticmethod
    def _check_index(label, value, size):
        if not 0 <= value < size:
            raise IndexError(f"{label} index {value} out of range [0, {size})")

    # -- persistence --------------------------------------------------------

    def to_document(self) -> dict:
        return {
            "schema": ENVIRONMENT_SCHEMA,
            "object_sizes_kb": self.object_sizes.tolist(),
            "hosting": self.hosting.tolist(),
            "job_inputs": [list(objs) for objs in self.job_inputs],
            "cn_speeds": self.cn_speeds.tolist(),
            "wan_bandwidth": self.wan_bandwidth.tolist(),
            "lan_bandwidth": self.lan_bandwidth.tolist(),
            "gamma": self.gamma,
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_document(), fh, indent=2)
            fh.write("\n")


_ENV_FIELDS = (
    "object_sizes_kb",
    "hosting",
    "job_inputs",
    "cn_speeds",
    "wan_bandwidth",
    "lan_bandwidth",
    "gamma",
)


def environment_from_document(doc: dict) -> GridEnvironment:
    """Rebuild an environment from :meth:`GridEnvironment.to_document` output.

    Raises :class:`DocumentError` naming the offending field when the schema
    tag is wrong or a field is missing or ill-typed.
    """
    if not isinstance(doc, dict):
        raise DocumentError("environment document must be a JSON object")
    schema = doc.get("schema")
    if schema != ENVIRONMENT_SCHEMA:
        raise DocumentError(
            f"field 'schema': expected {ENVIRONMENT_SCHEMA!r}, got {schema!r}"
        )
    missing = [name for name in _ENV_FIELDS if name not in doc]
    if missing:
        raise DocumentError("missing field(s): " + ", ".join(missing))
    try:
        env = GridEnvironment(
            object_sizes=np.asarray(doc["object_sizes_kb"], dtype=np.float64),
            hosting=np.asarray(doc["hosting"], dtype=np.int64),
            job_inputs=tuple(tuple(objs) for objs in doc["job_inputs"]),
            cn_speeds=np.asarray(doc["cn_speeds"], dtype=np.float64),
            wan_bandwidth=np.asarray(doc["wan_bandwidth"], dtype=np.float64),
            lan_bandwidth=np.asarray(doc["lan_bandwidth"], dtype=np.float64),
            gamma=float(doc["gamma"]),
        )
    except (TypeError, ValueError) as exc:
        raise DocumentError(f"environment document rejected: {exc}") from exc
    return env


def load_environment(path) -> GridEnvironment:
    with open(path) as fh:
        return environment_from_document(json.load(fh))


# -- generation --------------------------------------------------------------


@dataclass(frozen=True)
class GenerationConfig:
    """Knobs for random environment generation.

    Size and bandwidth ranges are inclusive uniform ranges.  Object
    popularity follows a Zipf law over object ids truncated to [1, D],
    exponent ``zipf_exponent``.  ``objects_per_job`` is the inclusive range
    for how many distinct objects a job reads; ``None`` resolves to
    ``(1, min(D, ceil(2 * D / J)))`` so the expected total demand stays
    proportional to the catalogue.
    """

    num_jobs: int
    num_objects: int
    num_cns: int
    num_local_sns: int
    num_remote_sns: int
    object_size_range_kb: tuple[float, float] = (50 * KB_PER_MB, 1500 * KB_PER_MB)
    wan_bandwidth_range: tuple[float, float] = (700.0, 1300.0)
    lan_bandwidth_range: tuple[float, float] = (7000.0, 13000.0)
    cn_speed_range: tuple[float, float] = (500.0, 1500.0)
    gamma: float = 1.0
    zipf_exponent: float = 1.0
    objects_per_job: tuple[int, int] | None = None
    rng_seed: int = 0

    def __post_init__(self):
        self._check()

    def _check(self):
        for label, n in (
            ("num_jobs", self.num_jobs),
            ("num_objects", self.num_objects),
            ("num_cns", self.num_cns),
            ("num_local_sns", self.num_local_sns),
            ("num_remote_sns", self.num_remote_sns),
        ):
            if n < 1:
                raise InvalidConfigError(f"{label} must be >= 1, got {n}")
        for label, rng in (
            ("object_size_range_kb", self.object_size_range_kb),
            ("wan_bandwidth_range", self.wan_bandwidth_range),
            ("lan_bandwidth_range", self.lan_bandwidth_range),
            ("cn_speed_range", self.cn_speed_range),
        ):
            lo, hi = rng
            if not (math.isfinite(lo) and math.isfinite(hi) and 0 < lo <= hi):
                raise InvalidConfigError(f"{label} must satisfy 0 < lo <= hi, got {rng}")
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise InvalidConfigError("gamma must be positive")
        if not (math.isfinite(self.zipf_exponent) and self.zipf_exponent > 0):
            raise InvalidConfigError("zipf_exponent must be positive")
        lo, hi = self.resolved_objects_per_job()
        if not 1 <= lo <= hi <= self.num_objects:
            raise InvalidConfigError(
                f"objects_per_job must satisfy 1 <= lo <= hi <= D, got ({lo}, {hi})"
            )

    def resolved_objects_per_job(self) -> tuple[int, int]:
        if self.objects_per_job is not None:
            return self.objects_per_job
        hi = min(self.num_objects, math.ceil(2 * self.num_objects / self.num_jobs))
        return (1, hi)

    def to_document(self) -> dict:
        doc = dataclasses.asdict(self)
        doc["schema"] = "generation-config/1"
        return doc


def config_from_document(doc: dict) -> GenerationConfig:
    if not isinstance(doc, dict):
        raise DocumentError("generation config document must be a JSON object")
    if doc.get("schema") != "generation-config/1":
        raise DocumentError(f"field 'schema': expected 'generation-config/1', got {doc.get('schema')!r}")
    kwargs = {k: v for k, v in doc.items() if k != "schema"}
    names = {f.name for f in dataclasses.fields(GenerationConfig)}
    unknown = sorted(set(kwargs) - names)
    if unknown:
        raise DocumentError("unknown field(s): " + ", ".join(unknown))
    for key in ("object_size_range_kb", "wan_bandwidth_range", "lan_bandwidth_range",
                "cn_speed_range", "objects_per_job"):
        if kwargs.get(key) is not None:
            kwargs[key] = tuple(kwargs[key])
    try:
        return GenerationConfig(**kwargs)
    except (TypeError, InvalidConfigError) as exc:
        raise DocumentError(f"generation config rejected: {exc}") from exc


def _zipf_weights(n: int, exponent: float) -> np.ndarray:
    weights = np.arange(1, n + 1, dtype=np.float64) ** -exponent
    return weights / weights.sum()


def generate(config: GenerationConfig, seed: int | None = None) -> GridEnvironment:
    """Draw a random environment.

    Object ids double as popularity ranks: id 0 is the most popular object.
    Job input sets are sampled without replacement by redrawing duplicates,
    which preserves the Zipf marginals up to the no-duplicate constraint.
    ``seed`` overrides ``config.rng_seed`` when given.
    """
    rng = np.random.default_rng(config.rng_seed if seed is None else seed)
    d, j = config.num_objects, config.num_jobs

    sizes = rng.uniform(*config.object_size_range_kb, size=d)
    speeds = rng.uniform(*config.cn_speed_range, size=config.num_cns)
    wan = rng.uniform(*config.wan_bandwidth_range,
                      size=(config.num_remote_sns, config.num_local_sns))
    lan = rng.uniform(*config.lan_bandwidth_range,
                      size=(config.num_local_sns, config.num_cns))
    hosting = rng.integers(0, config.num_remote_sns, size=d)

    weights = _zipf_weights(d, config.zipf_exponent)
    lo, hi = config.resolved_objects_per_job()
    job_inputs = []
    for _ in range(j):
        want = int(rng.integers(lo, hi, endpoint=True))
        picked: set[int] = set()
        while len(picked) < want:
            picked.add(int(rng.choice(d, p=weights)))
        job_inputs.append(tuple(sorted(picked)))

    return GridEnvironment(
        object_sizes=sizes,
        hosting=hosting,
        job_inputs=tuple(job_inputs),
        cn_speeds=speeds,
        wan_bandwidth=wan,
        lan_bandwidth=lan,
        gamma=config.gamma,
    )


GRID_PRESETS = {
    "small": dict(num_cns=10, num_remote_sns=10, num_local_sns=10,
                  num_jobs=10, num_objects=20),
    "medium": dict(num_cns=20, num_remote_sns=20, num_local_sns=20,
                   num_jobs=50, num_objects=100),
    "large": dict(num_cns=50, num_remote_sns=50, num_local_sns=50,
                  num_jobs=100, num_objects=300),
}

# Solver budget (seconds) conventionally paired with each preset in the
# benchmark harness.
PRESET_BUDGETS = {"small": 3.0, "medium": 30.0, "large": 300.0}


def preset_config(name: str, seed: int = 0, **overrides) -> GenerationConfig:
    """Generation config for one of the named grid sizes."""
    if name not in GRID_PRESETS:
        raise InvalidConfigError(
            f"unknown preset {name!r}; choose from {sorted(GRID_PRESETS)}"
        )
    kwargs = dict(GRID_PRESETS[name])
    kwargs.update(overrides)
    return GenerationConfig(rng_seed=seed, **kwargs)
