"""Non-negative, reliability-weighted l1-regularised least squares.

Minimises the smooth LASSO form

    0.5 * ||W (A x - y)||_2^2 + lam * sum(x)    subject to x >= 0

with ``W = diag(weights)``. Note the squared, halved residual: ``lam`` lives on
the usual LASSO scale, and the largest useful value is
``lambda_max = max(A^T W^T W y)``, above which ``x = 0`` is optimal.

The solver runs cyclic coordinate descent in ascending atom order. After
every sweep the problem restricted to the current support is solved
exactly and the iterate moves toward that point, stopping at the orthant
boundary and dropping coordinates there (a Lawson-Hanson inner loop). These
steps are only kept if they do not raise the objective. Convergence
is declared on the KKT residual, see :func:`kkt_check`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
from numba import njit

DEFAULT_TOL = 1e-6


class NoReliableRowsError(ValueError):
    pass


@dataclass
class SolveProblem:
    atoms: np.ndarray  # (L, N)
    target: np.ndarray  # (L,)
    weights: np.ndarray | None = None  # (L,), diagonal of W; None means all ones
    lam: float = 0.0
    max_iter: int | None = None  # coordinate sweeps; None -> 10 * N
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        self.atoms = np.asarray(self.atoms, dtype=np.float64)
        self.target = np.asarray(self.target, dtype=np.float64).ravel()
        if self.atoms.ndim != 2:
            raise ValueError("atoms must be a 2-D matrix")
        L, N = self.atoms.shape
        if self.target.size != L:
            raise ValueError(f"target has {self.target.size} rows, atoms have {L}")
        if self.weights is None:
            self.weights = np.ones(L)
        else:
            self.weights = np.asarray(self.weights, dtype=np.float64).ravel()
        if self.weights.size != L:
            raise ValueError(f"weights have {self.weights.size} rows, atoms have {L}")
        if not (np.all(np.isfinite(self.atoms)) and np.all(np.isfinite(self.target))
                and np.all(np.isfinite(self.weights))):
            raise ValueError("non-finite values in problem data")
        if np.any(self.weights < 0) or np.any(self.weights > 1):
            raise ValueError("weights must lie in [0, 1]")
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValueError("lam must be a finite value >= 0")
        if self.max_iter is None:
            self.max_iter = 10 * N

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[1]


@dataclass
class SolveResult:
    x: np.ndarray
    sparsity_f: int
    objective: float  # 0.5 * ||W(Ax - y)||^2 + lam * sum(x)
    residual_norm: float  # ||W(Ax - y)||_2
    kkt_residual: float
    iterations: int
    converged: bool
    lam: float
    history: list = field(default_factory=list, repr=False)

    @property
    def unsquared_objective(self) -> float:
        """``||W(Ax - y)||_2 + lam * ||x||_1`` evaluated at the returned x."""
        return self.residual_norm + self.lam * float(self.x.sum())


def lambda_max(atoms, target, weights=None) -> float:
    """Smallest penalty for which ``x = 0`` is optimal: ``max(A^T W^T W y)``."""
    atoms = np.asarray(atoms, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64).ravel()
    w2 = 1.0 if weights is None else np.asarray(weights, dtype=np.float64).ravel() ** 2
    return float(np.max(atoms.T @ (w2 * target)))


def kkt_residual_from_gradient(g: np.ndarray, x: np.ndarray, lam: float) -> float:
    active = x > 0
    res = 0.0
    if active.any():
        res = float(np.max(np.abs(g[active] + lam)))
    if (~active).any():
        res = max(res, float(np.max(np.maximum(0.0, -g[~active] - lam))))
    return res


def kkt_check(problem: SolveProblem, x) -> float:
    """Largest violation of the optimality conditions at ``x``.

    With ``g = A^T W^T (W A x - W y)`` the conditions are ``g_n = -lam`` where
    ``x_n > 0`` and ``g_n >= -lam`` where ``x_n = 0``.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size != problem.n_atoms:
        raise ValueError(f"x has {x.size} entries, problem has {problem.n_atoms} atoms")
    if np.any(x < 0):
        raise ValueError("x must be non-negative")
    w2 = problem.weights ** 2
    g = problem.atoms.T @ (w2 * (problem.atoms @ x - problem.target))
    return kkt_residual_from_gradient(g, x, problem.lam)


@njit(cache=True, nogil=True)
def _cd_sweep(B, x, r, col_sq, lam):
    L, N = B.shape
    for n in range(N):
        c = col_sq[n]
        if c == 0.0:
            continue
        g = 0.0
        for i in range(L):
            g += B[i, n] * r[i]
        new = x[n] - (g + lam) / c
        if new < 0.0:
            new = 0.0
        d = new - x[n]
        if d != 0.0:
            for i in range(L):
                r[i] += d * B[i, n]
            x[n] = new


def _objective(r, x, lam):
    return 0.5 * float(r @ r) + lam * float(x.sum())


def _accept(B, b, x, idx, new, lam, obj):
    cand = x.copy()
    cand[idx] = np.maximum(new, 0.0)
    r = B @ cand - b
    new_obj = _objective(r, cand, lam)
    # null-space moves leave the residual unchanged up to roundoff
    if new_obj <= obj + 1e-13 * max(1.0, abs(obj)):
        return cand, r, min(new_obj, obj)
    return None


def _step_to_boundary(xs, direction):
    """Largest step along ``direction`` keeping ``xs`` non-negative, clamped to 1."""
    blocked = np.flatnonzero(direction < 0)
    if blocked.size == 0:
        return 1.0, -1
    ratios = xs[blocked] / -direction[blocked]
    k = int(np.argmin(ratios))
    if ratios[k] >= 1.0:
        return 1.0, -1
    return float(ratios[k]), int(blocked[k])


def _newton_step(B, b, x, idx, lam, obj):
    BS = B[:, idx]
    try:
        factor = scipy.linalg.cho_factor(BS.T @ BS)
    except np.linalg.LinAlgError:
        return None
    z = scipy.linalg.cho_solve(factor, BS.T @ b - lam)
    if not np.all(np.isfinite(z)):
        return None
    xs = x[idx]
    step, hit = _step_to_boundary(xs, z - xs)
    new = xs + step * (z - xs)
    if hit >= 0:
        new[hit] = 0.0
    out = _accept(B, b, x, idx, new, lam, obj)
    return None if out is None else (*out, hit < 0)


def _null_space_step(B, b, x, idx, lam, obj):
    BS = B[:, idx]
    f = idx.size
    _, sv, Vt = np.linalg.svd(BS, full_matrices=True)
    tol = sv[0] * max(BS.shape) * np.finfo(float).eps if sv.size else 0.0
    rank = int(np.count_nonzero(sv > tol))
    if rank == f:
        return None
    V0 = Vt[rank:].T
    # steepest direction for the penalty term within null(B_S)
    v = -V0 @ (V0.T @ np.ones(f))
    if np.linalg.norm(v) < 1e-12:
        v = V0[:, 0] if np.any(V0[:, 0] < 0) else -V0[:, 0]
    xs = x[idx]
    blocked = np.flatnonzero(v < 0)
    ratios = xs[blocked] / -v[blocked]
    k = int(np.argmin(ratios))
    new = xs + ratios[k] * v
    new[blocked[k]] = 0.0
    out = _accept(B, b, x, idx, new, lam, obj)
    return None if out is None else (*out, False)


def _polish(B, b, x, lam, obj):
    """Lawson-Hanson inner loop on the current support.

    Repeatedly moves toward the exact minimiser restricted to the support,
    dropping the first coordinate that hits zero, until that minimiser is
    feasible. Rank-deficient supports are shrunk along a null-space direction
    instead. Each pass removes a coordinate or finishes, so this terminates.
    """
    r = None
    while True:
        idx = np.flatnonzero(x > 0)
        if idx.size == 0:
            break
        out = _newton_step(B, b, x, idx, lam, obj) if idx.size <= B.shape[0] else None
        if out is None:
            out = _null_space_step(B, b, x, idx, lam, obj)
        if out is None:
            break
        x, r, obj, done = out
        if done:
            break
    return x, r, obj


def _weighted_system(problem: SolveProblem):
    rows = problem.weights > 0
    if not rows.any():
        raise NoReliableRowsError("no reliable rows: every weight is zero")
    w = problem.weights[rows]
    B = np.asfortranarray(problem.atoms[rows] * w[:, None])
    b = problem.target[rows] * w
    return B, b


def solve(problem: SolveProblem, x0=None) -> SolveResult:
    """Solve ``problem``, optionally warm-started from ``x0``."""
    B, b = _weighted_system(problem)
    lam = float(problem.lam)
    N = B.shape[1]
    x = np.zeros(N) if x0 is None else np.maximum(np.asarray(x0, dtype=np.float64).ravel(), 0.0)
    if x.size != N:
        raise ValueError(f"x0 has {x.size} entries, problem has {N} atoms")
    col_sq = np.einsum("ij,ij->j", B, B)

    r = B @ x - b
    obj = _objective(r, x, lam)
    history = [obj]
    kkt = kkt_residual_from_gradient(B.T @ r, x, lam)
    converged = kkt <= problem.tol
    iterations = 0
    while not converged and iterations < problem.max_iter:
        iterations += 1
        _cd_sweep(B, x, r, col_sq, lam)
        r = B @ x - b
        sweep_obj = _objective(r, x, lam)
        # exact coordinate minimisation cannot raise the objective; guard roundoff
        obj = min(obj, sweep_obj)
        x, r_new, obj = _polish(B, b, x, lam, obj)
        if r_new is not None:
            r = r_new
        history.append(obj)
        kkt = kkt_residual_from_gradient(B.T @ r, x, lam)
        converged = kkt <= problem.tol

    residual_norm = float(np.linalg.norm(r))
    return SolveResult(
        x=x,
        sparsity_f=int(np.count_nonzero(x > 0)),
        objective=_objective(r, x, lam),
        residual_norm=residual_norm,
        kkt_residual=kkt,
        iterations=iterations,
        converged=bool(converged),
        lam=lam,
        history=history,
    )


def solve_path(problem: SolveProblem, lambda_grid: Sequence[float]) -> list[SolveResult]:
    """Solve along a strictly decreasing penalty grid with warm starts.

    ``problem.lam`` is ignored. Sparsity usually grows along the path but this
    is not enforced.
    """
    grid = np.asarray(lambda_grid, dtype=np.float64).ravel()
    if grid.size == 0:
        raise ValueError("lambda_grid is empty")
    if np.any(grid <= 0) or np.any(np.diff(grid) >= 0):
        raise ValueError("lambda_grid must be positive and strictly decreasing")
    results = []
    x = None
    for lam in grid:
        p = SolveProblem(problem.atoms, problem.target, problem.weights, float(lam),
                         problem.max_iter, problem.tol)
        res = solve(p, x0=x)
        results.append(res)
        x = res.x
    return results
