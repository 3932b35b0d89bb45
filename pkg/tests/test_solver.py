import numpy as np
import pytest
from hypothesis import given, strategies as st

from sparse_imputation.solver import (NoReliableRowsError, SolveProblem, kkt_check, lambda_max,
                                      solve, solve_path)

import oracles


def random_problem(seed, L_max=10, N_max=6, binary=True):
    r = np.random.default_rng(seed)
    L, N = int(r.integers(1, L_max + 1)), int(r.integers(1, N_max + 1))
    A = r.standard_normal((L, N))
    y = r.standard_normal(L)
    w = (r.random(L) < 0.6).astype(float) if binary else r.random(L)
    w[r.integers(L)] = 1.0
    lam = r.uniform(0, 0.7) * max(lambda_max(A, y, w), 1e-3)
    return A, y, w, lam


def test_identity_soft_threshold():
    res = solve(SolveProblem(np.eye(2), [1.0, 0.0], lam=0.5))
    np.testing.assert_allclose(res.x, oracles.nonneg_soft_threshold([1.0, 0.0], 0.5), atol=1e-12)
    assert res.converged and res.sparsity_f == 1
    assert kkt_check(SolveProblem(np.eye(2), [1.0, 0.0], lam=0.5), res.x) <= 1e-9


def test_large_penalty_gives_zero(rng):
    A, y = rng.random((6, 4)), rng.random(6)
    lmax = lambda_max(A, y)
    res = solve(SolveProblem(A, y, lam=lmax))
    assert not res.x.any()
    assert kkt_check(SolveProblem(A, y, lam=lmax * 1.5), np.zeros(4)) == 0.0


def test_three_atom_exact_recovery():
    r = np.random.default_rng(3)
    A = r.random((8, 3))
    y = A[:, 0].copy()
    # enumeration oracle over all supports gives x ~= e1
    x_ref, _ = oracles.nonneg_lasso_enumeration(A, y, np.ones(8), 1e-6)
    np.testing.assert_allclose(x_ref, [1.0, 0.0, 0.0], atol=1e-5)
    res = solve(SolveProblem(A, y, lam=1e-6))
    assert np.max(np.abs(res.x - [1.0, 0.0, 0.0])) < 1e-3
    np.testing.assert_allclose(res.x, x_ref, atol=1e-8)


def test_kkt_detects_perturbation():
    p = SolveProblem(np.eye(2), [1.0, 0.0], lam=0.5)
    assert kkt_check(p, [0.6, 0.0]) >= 0.05
    assert kkt_check(p, [0.5, 0.0]) == 0.0


def test_kkt_check_errors():
    p = SolveProblem(np.eye(2), [1.0, 0.0], lam=0.5)
    with pytest.raises(ValueError):
        kkt_check(p, [0.5])
    with pytest.raises(ValueError):
        kkt_check(p, [-0.1, 0.0])


def test_problem_validation():
    with pytest.raises(NoReliableRowsError, match="no reliable rows"):
        solve(SolveProblem(np.eye(2), [1.0, 0.0], weights=[0.0, 0.0], lam=0.1))
    with pytest.raises(ValueError):
        SolveProblem(np.eye(2), [np.nan, 0.0])
    with pytest.raises(ValueError):
        SolveProblem(np.eye(2), [1.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        SolveProblem(np.eye(2), [1.0, 0.0], weights=[1.5, 0.0])
    with pytest.raises(ValueError):
        SolveProblem(np.eye(2), [1.0, 0.0], lam=-1.0)


def test_path_starts_at_zero(rng):
    A, y = rng.random((5, 3)), rng.random(5)
    lmax = lambda_max(A, y)
    (res,) = solve_path(SolveProblem(A, y), [lmax])
    assert not res.x.any()


def test_path_end_matches_direct_solve():
    r = np.random.default_rng(3)
    A = r.random((8, 3))
    y = A[:, 0].copy()
    p = SolveProblem(A, y)
    path = solve_path(p, [0.5 * lambda_max(A, y), 1e-6])
    direct = solve(SolveProblem(A, y, lam=1e-6))
    np.testing.assert_allclose(path[-1].x, direct.x, atol=1e-6)


def test_path_on_identity():
    path = solve_path(SolveProblem(np.eye(2), [1.0, 0.0]), [0.8, 0.5])
    np.testing.assert_allclose(path[0].x, [0.2, 0.0], atol=1e-12)
    np.testing.assert_allclose(path[1].x, [0.5, 0.0], atol=1e-12)


def test_path_grid_validation():
    p = SolveProblem(np.eye(2), [1.0, 0.0])
    for grid in ([], [0.5, 0.8], [0.5, 0.5], [0.5, -0.1]):
        with pytest.raises(ValueError):
            solve_path(p, grid)


@given(seed=st.integers(0, 100_000))
def test_matches_enumeration_oracle(seed):
    A, y, w, lam = random_problem(seed)
    res = solve(SolveProblem(A, y, w, lam))
    _, best = oracles.nonneg_lasso_enumeration(A, y, w, lam)
    assert res.objective <= best + 1e-6
    assert res.converged and res.kkt_residual <= 1e-6


@given(seed=st.integers(0, 100_000), binary=st.booleans())
def test_invariants(seed, binary):
    A, y, w, lam = random_problem(seed, L_max=30, N_max=40, binary=binary)
    p = SolveProblem(A, y, w, lam)
    res = solve(p)
    assert res.x.min() >= 0
    assert res.sparsity_f == np.count_nonzero(res.x > 0)
    h = np.asarray(res.history)
    assert np.all(np.diff(h) <= 1e-12 * np.maximum(1.0, np.abs(h[:-1])))
    assert res.converged
    assert kkt_check(p, res.x) <= p.tol * 1.0001
    assert res.unsquared_objective == pytest.approx(
        np.linalg.norm(w * (A @ res.x - y)) + lam * res.x.sum())


@given(seed=st.integers(0, 100_000))
def test_binary_weights_select_rows(seed):
    A, y, w, lam = random_problem(seed, L_max=20, N_max=8)
    keep = w > 0
    full = solve(SolveProblem(A, y, w, lam))
    reduced = solve(SolveProblem(A[keep], y[keep], None, lam))
    assert full.objective == pytest.approx(reduced.objective, rel=1e-9, abs=1e-12)
    np.testing.assert_allclose(A @ full.x, A @ reduced.x, atol=1e-5)


@given(seed=st.integers(0, 100_000), c=st.floats(0.1, 10.0))
def test_argmin_is_scale_invariant(seed, c):
    A, y, w, lam = random_problem(seed, L_max=12, N_max=5)
    base = solve(SolveProblem(A, y, w, lam))
    scaled = solve(SolveProblem(c * A, c * y, w, c * c * lam, tol=1e-6 * c * c))
    np.testing.assert_allclose(scaled.x, base.x, atol=1e-6)


def test_warm_start_from_optimum_stops_immediately(rng):
    A, y = rng.random((10, 6)), rng.random(10)
    p = SolveProblem(A, y, lam=0.01 * lambda_max(A, y))
    first = solve(p)
    again = solve(p, x0=first.x)
    assert again.iterations == 0 and again.converged


def test_duplicate_atoms_are_deterministic(rng):
    a = rng.random(8)
    A = np.column_stack([a, a, rng.random(8)])
    p = SolveProblem(A, 2 * a, lam=1e-3)
    r1, r2 = solve(p), solve(p)
    assert r1.x.tobytes() == r2.x.tobytes()
    assert r1.converged
    _, best = oracles.nonneg_lasso_enumeration(A, 2 * a, np.ones(8), 1e-3)
    assert r1.objective <= best + 1e-9
