import numpy as np
import pytest

from gridopt.environment import GenerationConfig, GridEnvironment, generate


def tiny_config(seed: int) -> GenerationConfig:
    # 2**3 * 3! * 2**3 = 384 candidate schedules, small enough to enumerate
    return GenerationConfig(num_jobs=3, num_objects=3, num_cns=2,
                            num_local_sns=2, num_remote_sns=2,
                            objects_per_job=(1, 2), rng_seed=seed)


def tiny_env(seed: int) -> GridEnvironment:
    return generate(tiny_config(seed))


@pytest.fixture
def env_tiny():
    return tiny_env(0)


@pytest.fixture
def env_single_job():
    # one job, one object; every number chosen so the timings are exact:
    # replication 10240/1024 = 10 s, LAN 10240/10240 = 1 s, exec 10240/5120 = 2 s
    return GridEnvironment(
        object_sizes=[10240.0],
        hosting=[0],
        job_inputs=((0,),),
        cn_speeds=[5120.0],
        wan_bandwidth=[[1024.0]],
        lan_bandwidth=[[10240.0]],
        gamma=1.0,
    )


@pytest.fixture
def env_two_jobs():
    # two copies of the single-job setup sharing the one CN
    return GridEnvironment(
        object_sizes=[10240.0, 10240.0],
        hosting=[0, 0],
        job_inputs=((0,), (1,)),
        cn_speeds=[5120.0],
        wan_bandwidth=[[1024.0]],
        lan_bandwidth=[[10240.0]],
        gamma=1.0,
    )


@pytest.fixture(scope="session")
def env_small():
    from gridopt.environment import preset_config
    return generate(preset_config("small"), seed=0)


def random_env(rng) -> GridEnvironment:
    """A small random environment with randomized dimensions."""
    cfg = GenerationConfig(
        num_jobs=int(rng.integers(1, 6)),
        num_objects=int(rng.integers(1, 7)),
        num_cns=int(rng.integers(1, 5)),
        num_local_sns=int(rng.integers(1, 5)),
        num_remote_sns=int(rng.integers(1, 4)),
        rng_seed=int(rng.integers(0, 2**31)),
    )
    return generate(cfg)
