"""Benchmark the compiled replay kernel against the numpy fallback.

Runs the same replay workload through both implementations and prints
per-call timings and the speedup.  The two paths are also cross-checked for
agreement here, on top of the equality tests in the test suite.

Usage: python benchmarks/kernel_benchmark.py [--preset small|medium|large]
                                             [--calls N] [--seeds N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from gridopt import kernels
from gridopt.environment import generate, preset_config
from gridopt.evaluator import replay_arguments
from gridopt.schedule import random_schedule


def time_kernel(fn, workloads, calls):
    # one untimed pass first so numba compilation is not measured
    for args in workloads:
        fn(*args)
    start = time.perf_counter()
    done = 0
    while done < calls:
        for args in workloads:
            fn(*args)
            done += 1
            if done >= calls:
                break
    return (time.perf_counter() - start) / done


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--preset", default="small",
                        choices=["small", "medium", "large"])
    parser.add_argument("--calls", type=int, default=20000,
                        help="total kernel calls to time per implementation")
    parser.add_argument("--seeds", type=int, default=16,
                        help="number of distinct (env, schedule) workloads")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    workloads = []
    for seed in range(args.seeds):
        env = generate(preset_config(args.preset), seed=seed)
        workloads.append(replay_arguments(env, random_schedule(env, rng)))

    for w in workloads:
        a = kernels.replay_loops(*w)
        b = kernels.replay_numpy(*w)
        for x, y in zip(a, b):
            np.testing.assert_allclose(x, y, rtol=1e-12)
        if kernels.replay_jit is not None:
            c = kernels.replay_jit(*w)
            for x, y in zip(a, c):
                np.testing.assert_allclose(x, y, rtol=1e-12)

    per_numpy = time_kernel(kernels.replay_numpy, workloads, args.calls)
    print(f"numpy fallback : {per_numpy * 1e6:9.2f} us/call")
    if kernels.replay_jit is None:
        print("numba kernel   : unavailable (GRIDOPT_DISABLE_NUMBA set or numba missing)")
        return
    per_jit = time_kernel(kernels.replay_jit, workloads, args.calls)
    print(f"numba kernel   : {per_jit * 1e6:9.2f} us/call")
    print(f"speedup        : {per_numpy / per_jit:9.2f}x")


if __name__ == "__main__":
    main()
