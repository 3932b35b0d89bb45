"""Independent reference computations used as test oracles.

None of these call into the package under test.
"""
import itertools
import math

import numpy as np


def nonneg_lasso_enumeration(A, y, w, lam):
    """Exact minimiser of 0.5*||W(Ax-y)||^2 + lam*sum(x), x >= 0, by support enumeration.

    For every support S the stationarity equations are solved; feasible
    (strictly positive) solutions are scored and the best returned. Supports
    with singular Gram matrices are skipped: a basic optimal solution with
    linearly independent columns always exists.
    """
    A = np.asarray(A, float)
    y = np.asarray(y, float)
    w = np.asarray(w, float)
    B = A * w[:, None]
    b = y * w
    N = A.shape[1]
    best_x = np.zeros(N)
    best = 0.5 * b @ b
    for k in range(1, N + 1):
        for S in itertools.combinations(range(N), k):
            BS = B[:, S]
            G = BS.T @ BS
            if np.linalg.matrix_rank(G) < k:
                continue
            z = np.linalg.solve(G, BS.T @ b - lam)
            if np.any(z <= 0):
                continue
            x = np.zeros(N)
            x[list(S)] = z
            r = B @ x - b
            val = 0.5 * r @ r + lam * x.sum()
            if val < best:
                best, best_x = val, x
    return best_x, best


def nonneg_soft_threshold(y, lam):
    """Closed form for an orthonormal dictionary."""
    return np.maximum(np.asarray(y, float) - lam, 0.0)


def window_counts(D, L, delta):
    """Walk windows one by one and count how many cover each row."""
    counts = [0] * D
    starts = []
    start = 0
    while True:
        starts.append(start)
        for d in range(start, min(start + L, D)):
            counts[d] += 1
        if start + L >= D:
            break
        start += delta
    return starts, counts


def triangle_response(freq, band_count, low, high):
    """Response of each mel triangle at ``freq`` using the natural-log mel form."""
    mel = lambda f: 1127.0 * math.log(1.0 + f / 700.0)
    inv = lambda m: 700.0 * (math.exp(m / 1127.0) - 1.0)
    lo, hi = mel(low), mel(high)
    pts = [inv(lo + (hi - lo) * i / (band_count + 1)) for i in range(band_count + 2)]
    out = []
    for k in range(band_count):
        a, c, b = pts[k], pts[k + 1], pts[k + 2]
        if a <= freq <= c:
            out.append((freq - a) / (c - a))
        elif c < freq <= b:
            out.append((b - freq) / (b - c))
        else:
            out.append(0.0)
    return out, pts[1:-1]


def score_loops(truth, imputed, mask, floor_log):
    """Per-cell loops for unreliable RMSE, overall RMSE and linear-domain SNR."""
    K, T = len(truth), len(truth[0])
    se_all = se_unrel = 0.0
    n_unrel = 0
    sig = err = 0.0
    for k in range(K):
        for t in range(T):
            d = imputed[k][t] - truth[k][t]
            se_all += d * d
            if mask[k][t] < 0.5:
                se_unrel += d * d
                n_unrel += 1
                if truth[k][t] > floor_log + 1e-9:
                    s = math.exp(truth[k][t])
                    e = s - math.exp(imputed[k][t])
                    sig += s * s
                    err += e * e
    return (math.sqrt(se_unrel / n_unrel), math.sqrt(se_all / (K * T)),
            10 * math.log10(sig / err))
