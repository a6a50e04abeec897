import csv

import numpy as np
import pytest

from birktraj import (
    PrimalForm,
    ShapeError,
    SimpleNlp,
    SolveStatus,
    SolverOptions,
    build_birkhoff,
    initial_guess,
    kkt_residual,
    make_grid,
    prepared,
    registry,
    registry_solution,
    solve,
    transcribe,
    write_iteration_log,
)


def make_nlp(name, N=8, form="a", scaled=False, kind="lgl"):
    ocp = prepared(registry(name))
    sys = build_birkhoff(make_grid(kind, N, ocp.horizon))
    return transcribe(ocp, sys, PrimalForm(form, scaled=scaled))


# --- tiny QPs through the generic interface ------------------------------------


def unconstrained_qp():
    return SimpleNlp(
        n_z=1,
        objective=lambda z: float((z[0] - 3.0) ** 2),
        objective_gradient=lambda z: np.array([2.0 * (z[0] - 3.0)]),
    )


def equality_qp():
    return SimpleNlp(
        n_z=2,
        objective=lambda z: float(z @ z),
        objective_gradient=lambda z: 2.0 * z,
        constraints=lambda z: np.array([z[0] + z[1] - 1.0]),
        jacobian=lambda z: np.array([[1.0, 1.0]]),
        equality_mask=np.array([True]),
    )


def inequality_qp():
    # min -z  s.t.  z - 2 <= 0; active at the solution with multiplier 1
    return SimpleNlp(
        n_z=1,
        objective=lambda z: float(-z[0]),
        objective_gradient=lambda z: np.array([-1.0]),
        constraints=lambda z: np.array([z[0] - 2.0]),
        jacobian=lambda z: np.array([[1.0]]),
        equality_mask=np.array([False]),
    )


def test_unconstrained_quadratic():
    res = solve(unconstrained_qp(), np.zeros(1))
    assert res.converged
    assert abs(res.z[0] - 3.0) < 1e-8
    assert res.multipliers.size == 0
    assert res.covectors is None
    assert res.iterations <= 5


def test_equality_constrained_quadratic():
    res = solve(equality_qp(), np.zeros(2))
    assert res.converged
    assert np.allclose(res.z, [0.5, 0.5], atol=1e-9)
    assert res.multipliers[0] == pytest.approx(-1.0, abs=1e-9)


def test_active_inequality():
    res = solve(inequality_qp(), np.zeros(1))
    assert res.converged
    assert res.z[0] == pytest.approx(2.0, abs=1e-8)
    assert res.multipliers[0] == pytest.approx(1.0, abs=1e-8)
    # complementarity holds: the row is active with nonnegative multiplier
    assert res.kkt_residual <= SolverOptions().tol_feas


def test_inactive_inequality_stays_out_of_working_set():
    # same QP but minimizing +z^2: unconstrained optimum already feasible
    nlp = SimpleNlp(
        n_z=1,
        objective=lambda z: float(z[0] ** 2),
        objective_gradient=lambda z: np.array([2.0 * z[0]]),
        constraints=lambda z: np.array([z[0] - 2.0]),
        jacobian=lambda z: np.array([[1.0]]),
        equality_mask=np.array([False]),
    )
    res = solve(nlp, np.array([1.0]))
    assert res.converged
    assert abs(res.z[0]) < 1e-8
    assert res.multipliers[0] == 0.0


def test_contradictory_equalities_do_not_converge():
    nlp = SimpleNlp(
        n_z=1,
        objective=lambda z: 0.0,
        objective_gradient=lambda z: np.zeros(1),
        constraints=lambda z: np.array([z[0] - 1.0, z[0] - 2.0]),
        jacobian=lambda z: np.array([[1.0], [1.0]]),
        equality_mask=np.array([True, True]),
    )
    res = solve(nlp, np.zeros(1))
    assert res.status in (SolveStatus.INFEASIBLE, SolveStatus.LINE_SEARCH_FAILURE)
    assert not res.converged


def test_max_iter_status():
    res = solve(equality_qp(), np.zeros(2), SolverOptions(max_iter=0))
    assert res.status is SolveStatus.MAX_ITER


def test_bad_initial_point_rejected():
    with pytest.raises(ShapeError):
        solve(unconstrained_qp(), np.zeros(2))
    with pytest.raises(ShapeError):
        solve(unconstrained_qp(), np.array([np.nan]))


# --- KKT residual probe ---------------------------------------------------------


def test_kkt_residual_at_exact_qp_solution():
    nlp = equality_qp()
    assert kkt_residual(nlp, np.array([0.5, 0.5]), np.array([-1.0])) <= 1e-12
    z_off = np.array([0.5 + 1e-3, 0.5])
    assert kkt_residual(nlp, z_off, np.array([-1.0])) >= 1e-4


def test_kkt_residual_zero_dynamics_analytic_point():
    # hand-built optimum and multipliers; every residual vanishes
    nlp = make_nlp("zero-dynamics", N=6)
    m = nlp.n_nodes
    one = np.array([1.0])
    z = nlp.pack(np.ones((m, 1)), np.zeros((m, 0)), np.zeros((m, 1)), one, one)
    w = nlp.sys.w_B
    mu = np.concatenate([np.zeros(m), -2.0 * w, [-2.0], [-2.0]])
    assert kkt_residual(nlp, z, mu) <= 1e-10
    # same value through the relabeled container
    assert kkt_residual(nlp, z, nlp.relabel(mu)) <= 1e-10
    # perturbing the costate breaks stationarity at first order
    mu_bad = mu.copy()
    mu_bad[m] += 1e-3
    assert kkt_residual(nlp, z, mu_bad) >= 1e-4


# --- transcribed problems -------------------------------------------------------


@pytest.mark.parametrize("name", ["zero-dynamics", "scalar-lq", "double-integrator-energy"])
def test_registry_problems_converge(name):
    nlp = make_nlp(name, N=8)
    res = solve(nlp, initial_guess(nlp, "constant-midpoint"))
    assert res.converged, res.status
    assert res.iterations <= 30
    assert res.kkt_residual <= SolverOptions().tol_feas
    # independent recomputation from the returned multipliers agrees
    assert kkt_residual(nlp, res.z, res.multipliers) <= 2.0 * SolverOptions().tol_feas


def test_nonlinear_problem_converges():
    nlp = make_nlp("nonlinear-scalar", N=12)
    res = solve(nlp, initial_guess(nlp, "linear-endpoint-interpolation"))
    assert res.converged, res.status
    assert res.kkt_residual <= SolverOptions().tol_feas


def test_double_integrator_matches_analytic_solution():
    nlp = make_nlp("double-integrator-energy", N=16)
    res = solve(nlp, initial_guess(nlp, "constant-midpoint"))
    assert res.converged
    sol = registry_solution("double-integrator-energy")
    X, U, V, x_a, x_b = nlp.unpack(res.z)
    t = nlp.sys.grid.nodes
    assert nlp.objective(res.z) == pytest.approx(sol.cost, abs=1e-6)
    states = sol.state(t)  # (2, N+1)
    assert np.max(np.abs(X[:, 0] - states[0])) <= 1e-6
    assert np.max(np.abs(X[:, 1] - states[1])) <= 1e-6
    assert np.max(np.abs(U[:, 0] - sol.control(t)[0])) <= 1e-5
    # dynamics covectors approximate the costates, cost state's is one
    lam = res.covectors.dynamics
    costates = sol.costate(t)
    assert np.max(np.abs(lam[:, 0] - costates[0])) <= 1e-5
    assert np.max(np.abs(lam[:, 1] - costates[1])) <= 1e-5
    assert np.max(np.abs(lam[:, 2] - 1.0)) <= 1e-5


def test_scaled_form_reaches_same_objective():
    plain = make_nlp("scalar-lq", N=10)
    scaled = make_nlp("scalar-lq", N=10, scaled=True)
    r1 = solve(plain, initial_guess(plain, "constant-midpoint"))
    r2 = solve(scaled, initial_guess(scaled, "constant-midpoint"))
    assert r1.converged and r2.converged
    assert plain.objective(r1.z) == pytest.approx(scaled.objective(r2.z), abs=1e-8)


def test_determinism_bit_identical():
    nlp = make_nlp("double-integrator-energy", N=8)
    z0 = initial_guess(nlp, "constant-midpoint")
    r1 = solve(nlp, z0)
    r2 = solve(nlp, z0)
    assert np.array_equal(r1.z, r2.z)
    assert np.array_equal(r1.multipliers, r2.multipliers)
    assert r1.log == r2.log
    assert r1.iterations == r2.iterations


def test_relabel_round_trip_on_solver_output():
    nlp = make_nlp("scalar-lq", N=8)
    res = solve(nlp, initial_guess(nlp, "constant-midpoint"))
    assert res.converged
    back = nlp.unrelabel(res.covectors)
    assert np.array_equal(back, res.multipliers)


def test_iteration_log_csv(tmp_path):
    nlp = make_nlp("scalar-lq", N=6)
    res = solve(nlp, initial_guess(nlp, "constant-midpoint"))
    path = tmp_path / "iters.csv"
    write_iteration_log(res, path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["iter", "merit", "step", "stationarity", "feasibility", "complementarity"]
    assert len(rows) - 1 == res.iterations
    for row in rows[1:]:
        assert int(row[0]) >= 1
        for cell in row[1:]:
            assert np.isfinite(float(cell))
