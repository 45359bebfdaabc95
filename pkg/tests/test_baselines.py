import numpy as np
import pytest

from gridopt.baselines import (BaselineRun, GaConfig, _order_crossover,
                               classify_jobs, diana, ensemble_greedy, ga,
                               greedy, greedy_data_assignment, min_exe,
                               min_trans, random_baseline)
from gridopt.environment import GenerationConfig, GridEnvironment, generate
from gridopt.evaluator import makespan_of
from gridopt.solver import brute_force_optimal, register_backend

from conftest import tiny_env


@pytest.fixture(scope="module")
def tiny_oracle():
    env = tiny_env(0)
    _, best = brute_force_optimal(env)
    return env, best


def _all_methods(env, seed):
    return {
        "random": random_baseline(env, seed),
        "mintrans": min_trans(env, budget=5.0, seed=seed),
        "minexe": min_exe(env, budget=5.0, seed=seed),
        "greedy": greedy(env),
        "ensgreedy": ensemble_greedy(env, seed, runs=8),
        "diana": diana(env),
        "ga": ga(env, GaConfig(population=12, generations=15, seed=seed)),
    }


def test_every_baseline_is_valid_and_dominated_by_the_oracle(tiny_oracle):
    env, oracle = tiny_oracle
    for name, run in _all_methods(env, seed=0).items():
        assert isinstance(run, BaselineRun), name
        run.schedule.validate(env)
        assert run.makespan == pytest.approx(makespan_of(env, run.schedule)), name
        assert run.makespan >= oracle - 1e-9, name
        assert not run.degraded, name


def test_solver_backed_baselines_never_regress_from_their_start(tiny_oracle):
    env, _ = tiny_oracle
    for seed in range(4):
        start = random_baseline(env, seed).makespan
        assert min_trans(env, budget=5.0, seed=seed).makespan <= start + 1e-9
        assert min_exe(env, budget=5.0, seed=seed).makespan <= start + 1e-9


def test_min_trans_with_one_local_sn_is_the_random_baseline():
    env = generate(GenerationConfig(num_jobs=3, num_objects=3, num_cns=2,
                                    num_local_sns=1, num_remote_sns=2,
                                    rng_seed=11))
    run = min_trans(env, budget=5.0, seed=11)
    # only one placement exists, so optimizing it changes nothing
    assert run.makespan == pytest.approx(random_baseline(env, 11).makespan, rel=1e-15)


def test_min_exe_with_one_cn_is_the_random_baseline():
    env = generate(GenerationConfig(num_jobs=3, num_objects=3, num_cns=1,
                                    num_local_sns=2, num_remote_sns=2,
                                    rng_seed=12))
    run = min_exe(env, budget=5.0, seed=12)
    assert run.makespan == pytest.approx(random_baseline(env, 12).makespan, rel=1e-15)


class _RefusingBackend:
    name = "refuses"

    def solve_raw(self, model, budget):
        return None, "infeasible", "scripted refusal"


def test_solver_failure_degrades_to_the_initial_schedule(tiny_oracle):
    env, _ = tiny_oracle
    register_backend("refuses", _RefusingBackend)
    for method in (min_trans, min_exe):
        run = method(env, budget=1.0, seed=3, backend="refuses")
        assert run.degraded
        assert run.solver_statuses == ("error",)
        assert run.makespan == pytest.approx(random_baseline(env, 3).makespan)


# -- greedy --------------------------------------------------------------------


def _lan_env(num_jobs, num_cns, lan_row):
    # one object per job, all hosted on the single remote SN, one local SN
    return GridEnvironment(
        object_sizes=[10240.0] * num_jobs,
        hosting=[0] * num_jobs,
        job_inputs=tuple((d,) for d in range(num_jobs)),
        cn_speeds=[5120.0] * num_cns,
        wan_bandwidth=[[1024.0]],
        lan_bandwidth=[lan_row],
        gamma=1.0,
    )


def test_greedy_spreads_jobs_over_free_cns():
    env = _lan_env(num_jobs=2, num_cns=2, lan_row=[10240.0, 10240.0])
    run = greedy(env)
    assert run.schedule.job_cn[0] == 0          # tie goes to the lowest id
    assert sorted(run.schedule.job_cn) == [0, 1]
    assert np.array_equal(run.schedule.order, [0, 1])


def test_greedy_with_one_cn_stacks_everything():
    env = _lan_env(num_jobs=3, num_cns=1, lan_row=[10240.0])
    run = greedy(env)
    assert np.array_equal(run.schedule.job_cn, [0, 0, 0])


def test_greedy_respects_a_custom_order():
    env = _lan_env(num_jobs=3, num_cns=2, lan_row=[10240.0, 10240.0])
    run = greedy(env, order=[2, 0, 1])
    assert np.array_equal(run.schedule.order, [2, 0, 1])
    assert run.schedule.job_cn[2] == 0          # first visited takes CN 0


def _placement_env(wan_row, lan_cols):
    # one object, two local SNs, one CN; wan_row is (L,), lan_cols is (L,)
    return GridEnvironment(
        object_sizes=[1000.0],
        hosting=[0],
        job_inputs=((0,),),
        cn_speeds=[1000.0],
        wan_bandwidth=[list(wan_row)],
        lan_bandwidth=[[lan_cols[0]], [lan_cols[1]]],
        gamma=1.0,
    )


def test_greedy_placement_picks_the_cheaper_sn():
    env = _placement_env(wan_row=(10.0, 1000.0), lan_cols=(10.0, 1000.0))
    # costs: 1000/10 + 1000/10 = 200 on SN 0 vs 1 + 1 = 2 on SN 1
    assert greedy_data_assignment(env).tolist() == [1]


def test_greedy_placement_breaks_ties_low():
    env = _placement_env(wan_row=(10.0, 1000.0), lan_cols=(1000.0, 10.0))
    # both SNs cost 100 + 1 = 101
    assert greedy_data_assignment(env).tolist() == [0]


# -- ensemble greedy -----------------------------------------------------------


def test_ensemble_rejects_nonpositive_runs(tiny_oracle):
    env, _ = tiny_oracle
    with pytest.raises(ValueError, match="runs"):
        ensemble_greedy(env, seed=0, runs=0)


def test_ensemble_is_deterministic_and_monotone_in_runs(tiny_oracle):
    env, _ = tiny_oracle
    five = ensemble_greedy(env, seed=2, runs=5)
    again = ensemble_greedy(env, seed=2, runs=5)
    ten = ensemble_greedy(env, seed=2, runs=10)
    assert five.schedule.to_document() == again.schedule.to_document()
    assert five.extra["runs"] == 5 and ten.extra["runs"] == 10
    # the first five orders coincide, so more runs can only help
    assert ten.makespan <= five.makespan


def test_ensemble_budget_mode_has_a_floor_of_ten_runs(tiny_oracle):
    env, _ = tiny_oracle
    run = ensemble_greedy(env, seed=1, budget=1e-9)
    assert run.extra["runs"] == 10


def test_ensemble_defaults_to_fifty_runs(tiny_oracle):
    env, _ = tiny_oracle
    assert ensemble_greedy(env, seed=1).extra["runs"] == 50


# -- diana ---------------------------------------------------------------------


def test_diana_threshold_validation(tiny_oracle):
    env, _ = tiny_oracle
    for bad in (0.0, -1.0, float("inf"), float("nan")):
        with pytest.raises(ValueError):
            diana(env, threshold=bad)


def test_classification_saturates_at_extreme_thresholds(tiny_oracle):
    env, _ = tiny_oracle
    object_sn = greedy_data_assignment(env)
    ratios, low = classify_jobs(env, object_sn, threshold=1e-12)
    _, high = classify_jobs(env, object_sn, threshold=1e12)
    assert np.all(np.isfinite(ratios)) and np.all(ratios > 0)
    assert low.all()
    assert not high.any()


def _uniform_jobs_env(lan_row):
    # four identical jobs sharing one object; two CNs with equal speed
    return GridEnvironment(
        object_sizes=[1000.0],
        hosting=[0],
        job_inputs=((0,), (0,), (0,), (0,)),
        cn_speeds=[100.0, 100.0],
        wan_bandwidth=[[50.0]],
        lan_bandwidth=[lan_row],
        gamma=1.0,
    )


def test_diana_compute_branch_balances_load():
    env = _uniform_jobs_env(lan_row=[100.0, 100.0])
    run = diana(env, threshold=1e-12)       # everything counts as compute-heavy
    assert run.schedule.job_cn.tolist() == [0, 1, 0, 1]


def test_diana_data_branch_chases_the_fast_link():
    env = _uniform_jobs_env(lan_row=[100.0, 10.0])
    run = diana(env, threshold=1e12)        # everything counts as data-heavy
    assert run.schedule.job_cn.tolist() == [0, 0, 0, 0]
    assert "ratios" in run.extra and len(run.extra["ratios"]) == 4


# -- genetic algorithm ---------------------------------------------------------


def test_ga_config_validation():
    with pytest.raises(ValueError):
        GaConfig(population=1)
    with pytest.raises(ValueError):
        GaConfig(generations=0)
    with pytest.raises(ValueError):
        GaConfig(tournament=0)
    with pytest.raises(ValueError):
        GaConfig(population=5, tournament=6)
    with pytest.raises(ValueError):
        GaConfig(mutation_rate=1.5)
    with pytest.raises(ValueError):
        GaConfig(population=5, elitism=5)


def test_ga_rejects_config_plus_overrides(tiny_oracle):
    env, _ = tiny_oracle
    with pytest.raises(TypeError):
        ga(env, GaConfig(), seed=1)


def test_order_crossover_yields_permutations():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(2, 9))
        a, b = rng.permutation(n), rng.permutation(n)
        child = _order_crossover(rng, a, b)
        assert sorted(child.tolist()) == list(range(n))


def test_ga_history_tracks_the_best_ever(tiny_oracle):
    env, oracle = tiny_oracle
    run = ga(env, GaConfig(population=16, generations=20, seed=0))
    history = run.extra["history"]
    assert len(history) == run.extra["generations"]
    assert all(b <= a for a, b in zip(history, history[1:]))
    assert run.makespan == pytest.approx(history[-1])
    assert run.makespan >= oracle - 1e-9


def test_ga_is_deterministic(tiny_oracle):
    env, _ = tiny_oracle
    a = ga(env, GaConfig(population=10, generations=10, seed=5))
    b = ga(env, GaConfig(population=10, generations=10, seed=5))
    assert a.schedule.to_document() == b.schedule.to_document()
    assert a.extra["history"] == b.extra["history"]


def test_ga_on_a_one_point_search_space():
    env = generate(GenerationConfig(num_jobs=1, num_objects=1, num_cns=1,
                                    num_local_sns=1, num_remote_sns=1,
                                    rng_seed=2))
    _, oracle = brute_force_optimal(env)
    run = ga(env, GaConfig(population=4, generations=5, seed=0))
    assert run.makespan == pytest.approx(oracle)
    assert run.extra["history"] == [run.makespan] * 5


def test_ga_budget_cuts_the_run_short(tiny_oracle):
    env, _ = tiny_oracle
    run = ga(env, GaConfig(population=10, generations=1000, seed=0, budget=1e-9))
    assert run.extra["generations"] == 1
    assert len(run.extra["history"]) == 1
