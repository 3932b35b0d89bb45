"""Sparse imputation of unreliable spectrogram cells.

An utterance is flattened frame by frame into ``y`` (length ``D = K*T``) and
covered by windows of ``L = K*R`` rows that start every ``delta`` rows. For each
window with at least one reliable cell the reliable rows are explained as a
sparse non-negative combination of dictionary atoms, and ``A @ x`` becomes that
window's imputation candidate. Candidates for the same row are averaged.

Cells marked reliable keep their observed value; only unreliable cells receive
the averaged reconstruction.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import solver as _solver
from .dictionary import Dictionary
from .masks import reliable_cells, validate_mask

DEFAULT_LAMBDA_RATIO = 0.01
DEFAULT_PAD_VALUE = math.log(1e-10)


@dataclass(frozen=True)
class WindowPlan:
    D: int
    L: int
    delta: int
    window_count: int
    starts: tuple

    def span(self, i: int) -> tuple[int, int]:
        """Row range ``[start, stop)`` of window ``i`` (0-based)."""
        start = self.starts[i]
        return start, min(start + self.L, self.D)

    def spans(self):
        return [self.span(i) for i in range(self.window_count)]

    def coverage(self) -> np.ndarray:
        """Number of windows covering each of the ``D`` rows."""
        diff = np.zeros(self.D + 1, dtype=np.int64)
        for start, stop in self.spans():
            diff[start] += 1
            diff[stop] -= 1
        return np.cumsum(diff[:-1])

    @property
    def max_candidates(self) -> int:
        return math.ceil(self.L / self.delta)


def plan_windows(D: int, L: int, delta: int, K: int = 1) -> WindowPlan:
    """Window layout for a flattened utterance of ``D`` rows.

    ``I = ceil((D - L) / delta) + 1`` windows start at ``0, delta, 2*delta, ...``;
    the last one is cut short at ``D`` when it would run past the end.
    """
    if L < 1 or D < 1:
        raise ValueError("D and L must be positive")
    if L > D:
        raise ValueError(f"window of {L} rows is longer than the utterance ({D} rows)")
    if delta < 1 or delta % K:
        raise ValueError(f"shift of {delta} rows is not a positive multiple of K={K}")
    if delta > L and D > L:
        raise ValueError(f"shift {delta} exceeds window length {L}; rows would be skipped")
    I = -(-(D - L) // delta) + 1 if D > L else 1
    return WindowPlan(D, L, delta, I, tuple(i * delta for i in range(I)))


@dataclass
class WindowDiagnostics:
    index: int  # 1-based
    start: int
    stop: int
    reliable_cells: int
    skipped: bool
    lam: float = 0.0
    sparsity_f: int = 0
    iterations: int = 0
    kkt_residual: float = 0.0
    converged: bool = True
    candidate: np.ndarray | None = field(default=None, repr=False)

    def log_line(self) -> str:
        return (f"window={self.index} rows={self.start}:{self.stop} "
                f"reliable={self.reliable_cells} sparsity={self.sparsity_f} "
                f"iterations={self.iterations} kkt={self.kkt_residual:.3e} "
                f"skipped={int(self.skipped)}")


@dataclass
class ImputationResult:
    imputed: np.ndarray  # (K, T)
    candidate_counts: np.ndarray  # (K, T) int
    skipped_windows: list  # 1-based window indices
    per_window_diag: list
    solve_calls: int = 0
    uncovered: np.ndarray | None = None  # unreliable cells that received no candidate

    @property
    def window_count(self) -> int:
        return len(self.per_window_diag)


def _check_inputs(y, mask, dictionary: Dictionary):
    y = np.asarray(y, dtype=np.float64)
    mask = validate_mask(mask)
    if y.ndim != 2:
        raise ValueError("spectrogram must be a K x T matrix")
    if mask.shape != y.shape:
        raise ValueError(f"mask shape {mask.shape} != spectrogram shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ValueError("spectrogram contains non-finite values")
    if y.shape[0] != dictionary.K:
        raise ValueError(f"spectrogram has {y.shape[0]} bands, dictionary has K={dictionary.K}")
    return y, mask


def _solve_window(atoms, y_flat, m_flat, start, stop, index, lam, lam_ratio, tol,
                  max_iter, keep_candidate):
    w = m_flat[start:stop]
    n_reliable = int(np.count_nonzero(w > 0))
    if n_reliable == 0:
        return WindowDiagnostics(index, start, stop, 0, True), None
    A = atoms[:stop - start]
    target = y_flat[start:stop]
    if lam is None:
        lam = max(lam_ratio * _solver.lambda_max(A, target, w), 0.0)
    res = _solver.solve(_solver.SolveProblem(A, target, w, lam, max_iter, tol))
    gamma = A @ res.x
    diag = WindowDiagnostics(index, start, stop, n_reliable, False, lam, res.sparsity_f,
                             res.iterations, res.kkt_residual, res.converged,
                             gamma if keep_candidate else None)
    return diag, gamma


def _impute_planned(y, mask, dictionary, plan, lam, lam_ratio, tol, max_iter, threads,
                    keep_candidates):
    K, T = y.shape
    y_flat = y.ravel(order="F")
    m_flat = mask.ravel(order="F")
    atoms = dictionary.atoms

    def run(i):
        start, stop = plan.span(i)
        return _solve_window(atoms, y_flat, m_flat, start, stop, i + 1, lam, lam_ratio,
                             tol, max_iter, keep_candidates)

    if threads > 1 and plan.window_count > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run, range(plan.window_count)))
    else:
        outcomes = [run(i) for i in range(plan.window_count)]

    # reduction in window order keeps the sums bit-reproducible
    sums = np.zeros(plan.D)
    counts = np.zeros(plan.D, dtype=np.int64)
    diags, skipped = [], []
    for diag, gamma in outcomes:
        diags.append(diag)
        if gamma is None:
            skipped.append(diag.index)
            continue
        sums[diag.start:diag.stop] += gamma
        counts[diag.start:diag.stop] += 1

    estimate = np.divide(sums, counts, out=y_flat.copy(), where=counts > 0)
    reliable = reliable_cells(m_flat)
    out = np.where(reliable, y_flat, estimate)
    uncovered = (~reliable) & (counts == 0)
    return ImputationResult(
        imputed=out.reshape((K, T), order="F"),
        candidate_counts=counts.reshape((K, T), order="F"),
        skipped_windows=skipped,
        per_window_diag=diags,
        solve_calls=plan.window_count - len(skipped),
        uncovered=uncovered.reshape((K, T), order="F"),
    )


def impute_whole(y, mask, dictionary: Dictionary, lam: float | None = None,
                 lam_ratio: float = DEFAULT_LAMBDA_RATIO, tol: float = _solver.DEFAULT_TOL,
                 max_iter: int | None = None, keep_candidates: bool = True) -> ImputationResult:
    """Impute a whole utterance whose length equals the exemplar length R.

    ``lam`` is an absolute penalty; when None it is ``lam_ratio * lambda_max``.
    An all-unreliable mask skips the solve and returns the observation.
    """
    y, mask = _check_inputs(y, mask, dictionary)
    if y.shape[1] != dictionary.R:
        raise ValueError(f"utterance has T={y.shape[1]} frames, exemplars have R={dictionary.R}")
    plan = plan_windows(y.size, dictionary.L, dictionary.L, dictionary.K)
    return _impute_planned(y, mask, dictionary, plan, lam, lam_ratio, tol, max_iter, 1,
                           keep_candidates)


def impute_sliding(y, mask, dictionary: Dictionary, delta_frames: int = 1,
                   lam: float | None = None, lam_ratio: float = DEFAULT_LAMBDA_RATIO,
                   tol: float = _solver.DEFAULT_TOL, max_iter: int | None = None,
                   threads: int = 1, pad_value: float = DEFAULT_PAD_VALUE,
                   keep_candidates: bool = True) -> ImputationResult:
    """Sliding-window imputation with a shift of ``delta_frames`` frames.

    Utterances shorter than R frames are right-padded with ``pad_value`` and
    unreliable mask frames, imputed as a single window, then cropped.
    """
    y, mask = _check_inputs(y, mask, dictionary)
    if delta_frames < 1:
        raise ValueError("delta_frames must be >= 1")
    K, T = y.shape
    R = dictionary.R
    if T < R:
        y_pad = np.hstack([y, np.full((K, R - T), pad_value)])
        m_pad = np.hstack([mask, np.zeros((K, R - T))])
        res = impute_sliding(y_pad, m_pad, dictionary, delta_frames, lam, lam_ratio, tol,
                             max_iter, threads, pad_value, keep_candidates)
        return replace(res, imputed=res.imputed[:, :T],
                       candidate_counts=res.candidate_counts[:, :T],
                       uncovered=res.uncovered[:, :T])
    if delta_frames > R and T > R:
        raise ValueError(f"shift of {delta_frames} frames exceeds exemplar length R={R}")
    plan = plan_windows(K * T, dictionary.L, delta_frames * K, K)
    return _impute_planned(y, mask, dictionary, plan, lam, lam_ratio, tol, max_iter,
                           threads, keep_candidates)


def bounded_clamp(result: ImputationResult, y, mask) -> ImputationResult:
    """Cap every unreliable estimate at the observed noisy value."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != result.imputed.shape or np.shape(mask) != y.shape:
        raise ValueError("shape mismatch between result, observation and mask")
    unreliable = ~reliable_cells(mask)
    clamped = np.where(unreliable, np.minimum(result.imputed, y), result.imputed)
    return replace(result, imputed=clamped)
