"""Command-line behavior: config resolution, exit codes, output files."""

import json

import numpy as np
import pytest

from birktraj.cli import (
    EXIT_BAD_CONFIG,
    EXIT_OK,
    EXIT_SOLVER_FAILURE,
    EXIT_VERIFY_FAILED,
    RunConfig,
    build_parser,
    main,
    resolve_config,
)


def run(*argv):
    return main(list(argv))


# --- configuration ---------------------------------------------------------------


def test_run_config_defaults():
    config = RunConfig()
    assert config.problem is None
    assert config.kind == "lgl" and config.N == 32
    assert config.form == "a" and config.scaled is False
    assert config.out == "."


def test_run_config_rejects_bad_fields():
    with pytest.raises(ValueError):
        RunConfig(kind="legendre")
    with pytest.raises(ValueError):
        RunConfig(form="c")
    with pytest.raises(ValueError):
        RunConfig(N=0)
    with pytest.raises(ValueError):
        RunConfig(max_iter=-1)


def test_flags_override_defaults():
    args = build_parser().parse_args(
        ["solve", "--problem", "scalar-lq", "--N", "8", "--form", "b", "--scaled"]
    )
    config = resolve_config(args)
    assert config.problem == "scalar-lq"
    assert config.N == 8 and config.form == "b" and config.scaled is True
    assert config.kind == "lgl"  # untouched default


def test_config_file_overrides_flags(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"N": 4, "problem": "zero-dynamics"}))
    args = build_parser().parse_args(
        ["solve", "--problem", "scalar-lq", "--N", "16", "--config", str(path)]
    )
    config = resolve_config(args)
    assert config.N == 4 and config.problem == "zero-dynamics"


def test_unknown_config_key_is_bad_config(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"nodes": 4}))
    assert run("solve", "--config", str(path)) == EXIT_BAD_CONFIG


def test_unparseable_flags_exit_64():
    with pytest.raises(SystemExit) as err:
        run("solve", "--grid", "weird")
    assert err.value.code == EXIT_BAD_CONFIG


# --- solve -----------------------------------------------------------------------


def test_solve_analytic_problem(tmp_path):
    out = tmp_path / "run"
    code = run("solve", "--problem", "double-integrator-energy", "--N", "16",
               "--out", str(out))
    assert code == EXIT_OK
    data = json.loads((out / "solution.json").read_text())
    assert abs(data["primal"]["objective"] - 6.0) <= 1e-6
    assert data["status"] == "converged"
    assert data["verification"]["passed"] is True
    header = (out / "trajectory.csv").read_text().splitlines()[0]
    assert header.startswith("t,x_0,x_1,x_2,u_0,costate_0")


def test_solve_unknown_problem_exits_64(tmp_path):
    assert run("solve", "--problem", "no-such-thing",
               "--out", str(tmp_path)) == EXIT_BAD_CONFIG


def test_solve_missing_problem_exits_64(tmp_path):
    assert run("solve", "--out", str(tmp_path)) == EXIT_BAD_CONFIG


def test_solve_forms_agree_on_objective(tmp_path):
    for form in ("a", "a_star"):
        assert run("solve", "--problem", "double-integrator-energy", "--N", "16",
                   "--form", form, "--out", str(tmp_path / form)) == EXIT_OK
    cost = {
        form: json.loads((tmp_path / form / "solution.json").read_text())
        ["primal"]["objective"]
        for form in ("a", "a_star")
    }
    assert abs(cost["a"] - cost["a_star"]) <= 1e-8


def test_solve_rerun_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run("solve", "--problem", "scalar-lq", "--N", "8",
                   "--out", str(out)) == EXIT_OK
    assert (a / "solution.json").read_bytes() == (b / "solution.json").read_bytes()
    assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()


def test_solve_form_without_covector_route_skips_verification(tmp_path):
    code = run("solve", "--problem", "scalar-lq", "--N", "8", "--form", "b",
               "--out", str(tmp_path))
    assert code == EXIT_OK
    data = json.loads((tmp_path / "solution.json").read_text())
    assert data["dual"] is None and data["verification"] is None
    assert "costate" not in (tmp_path / "trajectory.csv").read_text().splitlines()[0]


def test_solve_unattainable_check_tolerance_exits_2(tmp_path):
    code = run("solve", "--problem", "scalar-lq", "--N", "8",
               "--tol-verify", "1e-18", "--out", str(tmp_path))
    assert code == EXIT_VERIFY_FAILED
    data = json.loads((tmp_path / "solution.json").read_text())
    assert data["verification"]["passed"] is False


def test_solve_iteration_starved_solver_exits_1(tmp_path):
    code = run("solve", "--problem", "nonlinear-scalar", "--N", "8",
               "--max-iter", "1", "--out", str(tmp_path))
    assert code == EXIT_SOLVER_FAILURE
    assert not (tmp_path / "solution.json").exists()


def test_solve_overtight_feasibility_tolerance_is_config_error(tmp_path):
    assert run("solve", "--problem", "scalar-lq", "--tol-feas", "1e-12",
               "--out", str(tmp_path)) == EXIT_BAD_CONFIG


def test_solve_json_problem_file(tmp_path):
    spec = {
        "name": "steer",
        "n_x": 1,
        "n_u": 1,
        "horizon": [0.0, 1.0],
        "dynamics": {"A": [[0.0]], "B": [[1.0]]},
        "running_cost": {"R": [[1.0]]},
        "constraints": [
            {"kind": "equality", "a": [1.0], "b": [0.0], "rhs": 0.0},
            {"kind": "equality", "a": [0.0], "b": [1.0], "rhs": 1.0},
        ],
    }
    path = tmp_path / "steer.json"
    path.write_text(json.dumps(spec))
    code = run("solve", "--problem", str(path), "--N", "8", "--out", str(tmp_path))
    assert code == EXIT_OK
    data = json.loads((tmp_path / "solution.json").read_text())
    assert data["problem"] == "steer"
    assert abs(data["primal"]["objective"] - 1.0) <= 1e-8  # same optimum as scalar-lq


# --- verify / indirect -----------------------------------------------------------


def test_verify_reports_blocks(tmp_path, capsys):
    code = run("verify", "--problem", "scalar-lq", "--N", "8", "--out", str(tmp_path))
    assert code == EXIT_OK
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["passed"] is True and len(report["blocks"]) == 11
    text = capsys.readouterr().out
    assert "PASS" in text and "costate_interpolation" in text


def test_verify_without_route_is_config_error(tmp_path):
    assert run("verify", "--problem", "scalar-lq", "--form", "b_star",
               "--out", str(tmp_path)) == EXIT_BAD_CONFIG


def test_verify_explicit_variant(tmp_path):
    code = run("verify", "--problem", "scalar-lq", "--N", "8",
               "--variant", "a,b", "--out", str(tmp_path))
    assert code == EXIT_OK
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["variant"] == "a,b"


def test_verify_garbage_variant_exits_64(tmp_path):
    assert run("verify", "--problem", "scalar-lq", "--variant", "a,q",
               "--out", str(tmp_path)) == EXIT_BAD_CONFIG


def test_indirect_solves_and_writes(tmp_path):
    code = run("indirect", "--problem", "scalar-lq", "--N", "8", "--out", str(tmp_path))
    assert code == EXIT_OK
    data = json.loads((tmp_path / "indirect.json").read_text())
    assert abs(data["primal"]["objective"] - 1.0) <= 1e-8
    assert data["variant"] == "a,b_star"
    lines = (tmp_path / "indirect_trajectory.csv").read_text().splitlines()
    assert lines[0].startswith("t,x_0") and "costate_0" in lines[0]
    assert len(lines) == 10  # header + 9 nodes


# --- bench / grids ---------------------------------------------------------------


def test_bench_cond_outputs(tmp_path):
    code = run("bench", "--study", "cond", "--orders", "4,8,16",
               "--out", str(tmp_path))
    assert code == EXIT_OK
    lines = (tmp_path / "conditioning.csv").read_text().splitlines()
    assert lines[0] == "kind,N,cond_B_a,cond_D,cond_kkt,note"
    assert len(lines) == 4
    assert "conditioning.csv" in (tmp_path / "conditioning.gp").read_text()


def test_bench_convergence_needs_problem(tmp_path):
    assert run("bench", "--study", "convergence",
               "--out", str(tmp_path)) == EXIT_BAD_CONFIG
    code = run("bench", "--study", "convergence", "--problem", "scalar-lq",
               "--orders", "4,8", "--out", str(tmp_path))
    assert code == EXIT_OK
    lines = (tmp_path / "convergence.csv").read_text().splitlines()
    assert len(lines) == 3
    assert (tmp_path / "convergence.gp").exists()


def test_bench_unsorted_orders_exit_64(tmp_path):
    assert run("bench", "--study", "cond", "--orders", "16,8",
               "--out", str(tmp_path)) == EXIT_BAD_CONFIG


def test_grids_dumps_system(tmp_path):
    code = run("grids", "--grid", "cgl", "--N", "4", "--domain", "0,2",
               "--out", str(tmp_path))
    assert code == EXIT_OK
    data = json.loads((tmp_path / "system.json").read_text())
    assert data["grid"]["kind"] == "cgl" and data["grid"]["N"] == 4
    assert data["grid"]["domain"] == [0.0, 2.0]
    assert np.isclose(sum(data["w_B"]), 2.0)
    assert len(data["B_a"]) == 5 and len(data["B_a"][0]) == 5


def test_grids_unbuildable_system_exits_1(tmp_path):
    assert run("grids", "--grid", "uniform", "--N", "64",
               "--out", str(tmp_path)) == EXIT_SOLVER_FAILURE
