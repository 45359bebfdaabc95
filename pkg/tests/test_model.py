import numpy as np
import pytest

from gridopt.evaluator import evaluate
from gridopt.model import (MilpModel, ModelError, build_fixed_all,
                           build_fixed_x, build_fixed_yz, build_monolithic,
                           extract_schedule, write_mps)
from gridopt.schedule import Schedule, random_schedule
from gridopt.solver import solve

from conftest import tiny_env


def _env_and_schedule(seed):
    env = tiny_env(seed)
    return env, random_schedule(env, seed)


def test_fixed_all_lp_matches_replay():
    for seed in range(5):
        env, s = _env_and_schedule(seed)
        rep = evaluate(env, s)
        res = solve(build_fixed_all(env, s), budget=10.0)
        assert res.status == "optimal"
        assert res.objective == pytest.approx(rep.makespan, rel=1e-9)


def test_every_builder_produces_a_feasible_warm_start():
    env, s = _env_and_schedule(1)
    rep = evaluate(env, s)
    models = [
        build_monolithic(env, warm_schedule=s),
        build_fixed_yz(env, s.order, s.object_sn, warm_cn=s.job_cn),
        build_fixed_x(env, s.job_cn, warm_order=s.order, warm_object_sn=s.object_sn),
        build_fixed_x(env, s.job_cn, warm_order=s.order,
                      warm_object_sn=s.object_sn, fix_order=s.order),
    ]
    for mdl in models:
        assert mdl.warm_start is not None
        assert mdl.check_assignment(mdl.warm_start) == []
        assert mdl.objective_value(mdl.warm_start) == pytest.approx(rep.makespan, rel=1e-12)


def test_model_kinds():
    env, s = _env_and_schedule(2)
    assert build_monolithic(env).kind == "monolithic"
    assert build_fixed_yz(env, s.order, s.object_sn).kind == "fixed-yz"
    assert build_fixed_x(env, s.job_cn).kind == "fixed-x"
    assert build_fixed_x(env, s.job_cn, fix_order=s.order).kind == "fixed-xy"
    assert build_fixed_all(env, s).kind == "fixed-xyz"


def test_warm_start_must_match_pins():
    env, s = _env_and_schedule(3)
    flipped = s.order[::-1].copy()
    with pytest.raises(ModelError, match="contradicts"):
        build_fixed_x(env, s.job_cn, warm_order=flipped,
                      warm_object_sn=s.object_sn, fix_order=s.order)
    # fixed_x warm params must come as a pair
    with pytest.raises(ModelError):
        build_fixed_x(env, s.job_cn, warm_order=s.order)


def test_builder_argument_validation():
    env, s = _env_and_schedule(4)
    with pytest.raises(ModelError):
        build_fixed_x(env, np.full(env.num_jobs, env.num_cns))
    with pytest.raises(ModelError):
        build_fixed_yz(env, np.zeros(env.num_jobs, dtype=int), s.object_sn)
    with pytest.raises(ModelError):
        build_fixed_yz(env, s.order, np.full(env.num_objects, -1))


def test_pinned_variables_keep_full_variable_set():
    env, s = _env_and_schedule(5)
    core = {f"X[{j},{c}]" for j in range(env.num_jobs) for c in range(env.num_cns)}
    core |= {f"Z[{d},{l}]" for d in range(env.num_objects) for l in range(env.num_local_sns)}
    core |= {"m"}
    for mdl in (build_fixed_all(env, s),
                build_fixed_yz(env, s.order, s.object_sn),
                build_fixed_x(env, s.job_cn)):
        assert core <= set(mdl.names)
    mdl = build_fixed_all(env, s)
    for j, c in ((0, 0), (1, 1)):
        i = mdl.var_index(f"X[{j},{c}]")
        pin = float(s.job_cn[j] == c)
        assert mdl.lower[i] == mdl.upper[i] == pin


def test_precedence_rows_are_emitted_sparsely():
    env, s = _env_and_schedule(6)
    nj, nc = env.num_jobs, env.num_cns

    def prec_rows(mdl):
        return [r for r in mdl.row_names if r.startswith("prec[")]

    mono = build_monolithic(env)
    assert len(prec_rows(mono)) == nj * (nj - 1) * nc
    yz = build_fixed_yz(env, s.order, s.object_sn)
    assert len(prec_rows(yz)) == nj * (nj - 1) // 2 * nc
    fx = build_fixed_x(env, s.job_cn)
    shared = sum(1 for i in range(nj) for j in range(nj)
                 if i != j and s.job_cn[i] == s.job_cn[j])
    assert len(prec_rows(fx)) == shared
    fa = build_fixed_all(env, s)
    assert len(prec_rows(fa)) == shared // 2


def test_fixed_all_carries_no_big_a_coefficients():
    env, s = _env_and_schedule(7)
    mdl = build_fixed_all(env, s)
    assert np.abs(mdl.data).max() < mdl.big_a
    assert np.all(np.isfinite(mdl.row_lower) | np.isfinite(mdl.row_upper))


def test_product_variables_only_in_monolithic():
    env, s = _env_and_schedule(8)
    assert any(n.startswith("W1[") for n in build_monolithic(env).names)
    assert any(n.startswith("XZ[") for n in build_monolithic(env).names)
    for mdl in (build_fixed_yz(env, s.order, s.object_sn),
                build_fixed_x(env, s.job_cn),
                build_fixed_all(env, s)):
        assert not any(n.startswith(("W1[", "W2[", "XZ[")) for n in mdl.names)


def test_objective_selects_makespan_variable():
    env, s = _env_and_schedule(9)
    mdl = build_fixed_all(env, s)
    nz = np.flatnonzero(mdl.objective)
    assert nz.tolist() == [mdl.var_index("m")]
    assert mdl.objective[nz[0]] == 1.0


def test_extract_schedule_roundtrip():
    for seed in range(6):
        env, s = _env_and_schedule(seed)
        mdl = build_monolithic(env, warm_schedule=s)
        rebuilt = extract_schedule(env, mdl.warm_start)
        np.testing.assert_array_equal(rebuilt.job_cn, s.job_cn)
        np.testing.assert_array_equal(rebuilt.object_sn, s.object_sn)
        # order agrees wherever it matters: within each CN
        assert evaluate(env, rebuilt).makespan == pytest.approx(
            evaluate(env, s).makespan, rel=1e-12)


def test_check_assignment_reports_violations():
    env, s = _env_and_schedule(0)
    mdl = build_fixed_yz(env, s.order, s.object_sn, warm_cn=s.job_cn)
    good = dict(mdl.warm_start)
    assert mdl.check_assignment(good) == []

    fractional = dict(good)
    fractional[f"X[0,{int(s.job_cn[0])}]"] = 0.5
    problems = mdl.check_assignment(fractional)
    assert any("not integral" in p for p in problems)

    torn = dict(good)
    torn["m"] = 0.0
    problems = mdl.check_assignment(torn)
    assert any(p.startswith("row makespan[") for p in problems)

    with pytest.raises(KeyError):
        incomplete = dict(good)
        del incomplete["m"]
        mdl.vector_from(incomplete)

    with pytest.raises(KeyError):
        mdl.var_index("Q[0]")


def test_write_mps_structure(tmp_path):
    env, s = _env_and_schedule(1)
    mdl = build_fixed_yz(env, s.order, s.object_sn, warm_cn=s.job_cn)
    path = tmp_path / "model.mps"
    write_mps(mdl, path)
    text = path.read_text()
    for section in ("NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"):
        assert section in text
    assert "'INTORG'" in text and "'INTEND'" in text
    assert " N  OBJ" in text
    # bracketed names must have been sanitized for the interchange format
    assert "[" not in text.replace("'MARKER'", "")
    assert sum(1 for line in text.splitlines() if line.startswith(" E ")) == \
        sum(1 for lo, hi in zip(mdl.row_lower, mdl.row_upper) if lo == hi)
