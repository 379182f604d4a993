"""Solver tests: toy optima, certified tiny instance, residual oracles."""

import numpy as np
import pytest
import scipy.sparse as sp

from dualblind._pack import SQRT2, svec, svec_index, svec_len, unsvec
from dualblind.lifting import Measurement, synthesize_measurements
from dualblind.scene import ChannelSpec, Dims, Scene, make_subspaces
from dualblind.sdp import ConicProblem, build_dual_sdp
from util import certified_tiny_scene
from dualblind.solver import (
    RawSolution,
    SolverOptions,
    _GenericEqualitySolver,
    _make_equality_solver,
    _PinnedEqualitySolver,
    project_psd_block,
    residuals,
    solve,
    solve_with,
)


# -----------------------------------------------------------------
# Fixtures: the contract toys and a certified tiny instance
# -----------------------------------------------------------------

def one_d_toy():
    """maximize x s.t. [[1, x], [x, 1]] PSD; optimum x* = 1."""
    rows = [0, 1, 2, 2]
    cols = [1, 3, 2, 0]
    vals = [1.0, 1.0, 1.0, -SQRT2]
    A = sp.coo_matrix((vals, (rows, cols)), shape=(3, 4)).tocsr()
    return ConicProblem(c=np.array([-1.0, 0.0, 0.0, 0.0]), A=A,
                        b=np.array([1.0, 1.0, 0.0]),
                        free_dim=1, psd_dims=[2])


def trace_feasibility_toy(d=4):
    """min Tr(Q) s.t. Tr(Q) = 1, Q PSD; objective exactly 1."""
    diag = np.array([svec_index(d, i, i) for i in range(d)])
    A = sp.coo_matrix((np.ones(d), (np.zeros(d, dtype=int), diag)),
                      shape=(1, svec_len(d))).tocsr()
    c = np.zeros(svec_len(d))
    c[diag] = 1.0
    return ConicProblem(c=c, A=A, b=np.array([1.0]), free_dim=0, psd_dims=[d])


def certified_tiny_instance(gram_mode="shared"):
    """Smallest dual-blind instance whose true atoms are dual-certified.

    One target and one path, maximally separated in delay, with the
    message coefficients concentrated on the first pulse; the dual
    optimum then equals |alpha_r| + |alpha_c| = 2 (verified against an
    external conic solver).
    """
    _, sub, meas = certified_tiny_scene()
    return build_dual_sdp(meas, sub, gram_mode=gram_mode)


# -----------------------------------------------------------------
# Options and projection primitives
# -----------------------------------------------------------------

def test_options_validation():
    with pytest.raises(ValueError):
        SolverOptions(eps_abs=0.0).validate()
    with pytest.raises(ValueError):
        SolverOptions(eps_rel=-1e-9).validate()
    with pytest.raises(ValueError):
        SolverOptions(max_iters=0).validate()
    with pytest.raises(ValueError):
        SolverOptions(over_relax=2.0).validate()
    with pytest.raises(ValueError):
        SolverOptions(rho=0.0).validate()
    SolverOptions().validate()


def test_project_psd_keeps_psd_input():
    rng = np.random.default_rng(0)
    G = rng.standard_normal((6, 6))
    S = G @ G.T
    np.testing.assert_allclose(project_psd_block(S), S, atol=1e-12)


def test_project_psd_clips_negative():
    S = np.diag([1.0, -2.0])
    np.testing.assert_allclose(project_psd_block(S), np.diag([1.0, 0.0]),
                               atol=1e-14)


def test_project_psd_idempotent_and_nearest():
    rng = np.random.default_rng(1)
    S = rng.standard_normal((8, 8))
    S = 0.5 * (S + S.T)
    P = project_psd_block(S)
    assert np.linalg.eigvalsh(P).min() >= -1e-12
    np.testing.assert_allclose(project_psd_block(P), P, atol=1e-12)
    # variational check: any PSD perturbation of P is farther from S
    base = np.linalg.norm(S - P)
    for k in range(5):
        E = rng.standard_normal((8, 8))
        Q = project_psd_block(P + 0.1 * (E + E.T))
        assert np.linalg.norm(S - Q) >= base - 1e-10


# -----------------------------------------------------------------
# Toy optima
# -----------------------------------------------------------------

def test_one_d_toy_optimum():
    sol = solve(one_d_toy(), SolverOptions(eps_abs=1e-9, eps_rel=1e-9))
    assert sol.status == "optimal"
    assert sol.primal[0] == pytest.approx(1.0, abs=1e-6)


def test_trace_feasibility_toy():
    sol = solve(trace_feasibility_toy())
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(1.0, abs=1e-6)


def test_zero_data_dual_sdp_has_zero_objective():
    dims = Dims(N=1, P=2, N_r=1, K=1)
    meas = Measurement(y=np.zeros(dims.J, dtype=complex), dims=dims)
    prob = build_dual_sdp(meas, make_subspaces(dims, seed=3))
    sol = solve(prob)
    assert abs(sol.objective) <= 1e-6


def test_certified_tiny_instance_reaches_amplitude_sum():
    prob = certified_tiny_instance()
    sol = solve(prob, SolverOptions(eps_abs=1e-8, eps_rel=1e-8))
    assert sol.status == "optimal"
    assert -(prob.c @ sol.primal) == pytest.approx(2.0, abs=1e-3)


def test_max_iters_returns_partial_solution():
    sol = solve(certified_tiny_instance(), SolverOptions(max_iters=3))
    assert sol.status == "max_iters"
    assert sol.iterations == 3
    assert np.all(np.isfinite(sol.primal))
    assert all(np.isfinite(v) for v in sol.residuals.values())


def test_scaling_off_still_converges():
    sol = solve(one_d_toy(), SolverOptions(scaling=False))
    assert sol.status == "optimal"
    assert sol.primal[0] == pytest.approx(1.0, abs=1e-5)


# -----------------------------------------------------------------
# Equality-projection linear algebra
# -----------------------------------------------------------------

def test_pinned_path_detected_on_dual_sdp():
    prob = certified_tiny_instance()
    lin = _make_equality_solver(prob.A.tocsr(), prob.free_dim)
    assert isinstance(lin, _PinnedEqualitySolver)


def test_pinned_and_generic_solvers_agree():
    prob = certified_tiny_instance()
    A = prob.A.tocsr()
    fast = _PinnedEqualitySolver(A, prob.free_dim)
    slow = _GenericEqualitySolver(A)
    rng = np.random.default_rng(4)
    for _ in range(5):
        r = rng.standard_normal(prob.n_rows)
        x_fast = fast.solve(r)
        x_slow = slow.solve(r)
        np.testing.assert_allclose(x_fast, x_slow, rtol=0, atol=1e-8 * np.linalg.norm(r))


def test_rank_deficient_system_reports_error():
    # duplicating an equality row makes A A^T singular
    prob = one_d_toy()
    A2 = sp.vstack([prob.A, prob.A[2, :]]).tocsr()
    b2 = np.concatenate([prob.b, prob.b[2:3]])
    bad = ConicProblem(c=prob.c, A=A2, b=b2, free_dim=1, psd_dims=[2])
    with pytest.raises(ValueError, match="rank deficient"):
        solve(bad)


# -----------------------------------------------------------------
# Residuals
# -----------------------------------------------------------------

def test_residuals_near_zero_at_optimum():
    prob = one_d_toy()
    sol = solve(prob, SolverOptions(eps_abs=1e-10, eps_rel=1e-10))
    rep = residuals(prob, sol.primal, sol.dual)
    assert rep.primal < 1e-9
    assert rep.dual < 1e-9
    assert rep.gap < 1e-9


def test_residuals_match_solver_report():
    prob = certified_tiny_instance()
    sol = solve(prob)
    rep = residuals(prob, sol.primal, sol.dual)
    assert rep.primal == pytest.approx(sol.residuals["primal"], rel=1e-12, abs=1e-15)
    assert rep.dual == pytest.approx(sol.residuals["dual"], rel=1e-12, abs=1e-15)
    assert rep.gap == pytest.approx(sol.residuals["gap"], rel=1e-12, abs=1e-15)


def test_residual_grows_linearly_with_perturbation():
    prob = one_d_toy()
    sol = solve(prob, SolverOptions(eps_abs=1e-10, eps_rel=1e-10))
    base = residuals(prob, sol.primal, sol.dual).primal
    for eps in (1e-6, 1e-4, 1e-2):
        x = sol.primal.copy()
        x[1] += eps
        grown = residuals(prob, x, sol.dual).primal
        assert grown == pytest.approx(max(base, eps), rel=0.5)


def test_residuals_validates_shapes():
    prob = one_d_toy()
    with pytest.raises(ValueError):
        residuals(prob, np.zeros(2), np.zeros(3))


# -----------------------------------------------------------------
# Behavior properties
# -----------------------------------------------------------------

def test_solver_is_deterministic():
    prob = certified_tiny_instance()
    a = solve(prob)
    b = solve(prob)
    assert a.iterations == b.iterations
    np.testing.assert_array_equal(a.primal, b.primal)
    np.testing.assert_array_equal(a.dual, b.dual)


def test_reported_blocks_are_psd():
    prob = certified_tiny_instance()
    opts = SolverOptions()
    sol = solve(prob, opts)
    base = prob.free_dim
    for D in prob.psd_dims:
        ln = svec_len(D)
        S = unsvec(sol.primal[base:base + ln], D)
        assert np.linalg.eigvalsh(S).min() >= -10 * opts.eps_abs
        base += ln


def test_residual_trend_mostly_monotone():
    prob = certified_tiny_instance()
    sol = solve(prob, SolverOptions(eps_abs=1e-9, eps_rel=1e-9,
                                    check_interval=10))
    hist = [max(h["primal_rel"], h["dual_rel"], h["gap_rel"])
            for h in sol.history]
    lag = 10
    if len(hist) <= lag:
        pytest.skip("solve converged before enough checkpoints accumulated")
    pairs = [(hist[k], hist[k + lag]) for k in range(len(hist) - lag)]
    good = sum(1 for before, after in pairs if after <= before)
    assert good / len(pairs) >= 0.9


def test_warm_start_accelerates_resolve():
    prob = certified_tiny_instance()
    cold = solve(prob)
    warm = solve(prob, warm_start=cold)
    assert warm.status == "optimal"
    assert warm.iterations <= cold.iterations
    assert -(prob.c @ warm.primal) == pytest.approx(2.0, abs=1e-3)


def test_backend_registry():
    sol = solve_with("native", one_d_toy())
    assert isinstance(sol, RawSolution)
    with pytest.raises(ValueError, match="unknown solver backend"):
        solve_with("simplex", one_d_toy())


# -----------------------------------------------------------------
# External solver cross-check on the exported standard form
# -----------------------------------------------------------------

def _cvxpy_objective(problem):
    cp = pytest.importorskip("cvxpy")
    x = cp.Variable(problem.n_vars)
    cons = [problem.A @ x == problem.b]
    base = problem.free_dim
    for D in problem.psd_dims:
        ln = svec_len(D)
        iu, ju = np.triu_indices(D)
        rows = np.concatenate([iu * D + ju, ju * D + iu])
        cols = np.concatenate([np.arange(ln), np.arange(ln)])
        vals = np.where(iu == ju, 0.5, 1.0 / SQRT2)
        vals = np.concatenate([vals, vals])
        L = sp.coo_matrix((vals, (rows, cols)), shape=(D * D, ln)).tocsr()
        S = cp.reshape(L @ x[base:base + ln], (D, D), order="C")
        cons.append(S >> 0)
        base += ln
    cvx = cp.Problem(cp.Minimize(problem.c @ x), cons)
    cvx.solve(solver=cp.CLARABEL)
    return cvx.value


@pytest.mark.parametrize("make_problem", [one_d_toy, certified_tiny_instance],
                         ids=["toy", "tiny-dbd"])
def test_native_matches_external_solver(make_problem):
    prob = make_problem()
    reference = _cvxpy_objective(ConicProblem.loads(prob.dumps()))
    sol = solve(prob, SolverOptions(eps_abs=1e-8, eps_rel=1e-8))
    assert sol.status == "optimal"
    native = float(prob.c @ sol.primal)
    assert abs(native - reference) / max(1.0, abs(reference)) < 1e-4
