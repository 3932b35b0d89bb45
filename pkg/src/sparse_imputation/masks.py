"""Reliability masks over (K, T) time-frequency cells.

A mask value of 1 marks a cell dominated by speech (reliable), 0 a cell
dominated by noise. Continuous values in [0, 1] are accepted everywhere a mask
is consumed and act as soft weights; a cell counts as reliable when its value
is >= 0.5.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RELIABLE_THRESHOLD = 0.5


@dataclass(frozen=True)
class MaskStats:
    reliable_pct: float
    false_reliable_pct: float


def _same_shape(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return a, b


def is_binary(mask) -> bool:
    m = np.asarray(mask)
    return bool(np.all((m == 0) | (m == 1)))


def validate_mask(mask) -> np.ndarray:
    m = np.asarray(mask, dtype=np.float64)
    if not np.all((m >= 0) & (m <= 1)):
        raise ValueError("mask values must lie in [0, 1]")
    return m


def reliable_cells(mask) -> np.ndarray:
    return np.asarray(mask) >= RELIABLE_THRESHOLD


def oracle_mask(S, N) -> np.ndarray:
    """1 where clean speech strictly exceeds noise, 0 elsewhere (ties -> 0)."""
    S, N = _same_shape(S, N)
    return (S > N).astype(np.float64)


def threshold_mask(Y, N_est, snr_threshold_db: float = 0.0) -> np.ndarray:
    """Label cells whose noisy energy exceeds a noise estimate by a margin.

    ``Y`` and ``N_est`` are log-power (natural log), so the dB threshold is
    converted with ``ln(10) / 10``.
    """
    Y, N_est = _same_shape(Y, N_est)
    margin = snr_threshold_db * np.log(10.0) / 10.0
    return (Y - N_est > margin).astype(np.float64)


def peak_noise_estimate(N) -> np.ndarray:
    """Per-band peak-hold noise level: the maximum of ``N`` over time.

    This is the noise estimate behind :func:`threshold_mask` in sweeps. A mean
    level would let roughly half of all noise-only cells through a 0 dB
    threshold; the peak keeps the estimated mask conservative.
    """
    N = np.asarray(N, dtype=np.float64)
    return np.broadcast_to(N.max(axis=1, keepdims=True), N.shape).copy()


def remove_false_reliables(estimated, oracle) -> np.ndarray:
    estimated, oracle = _same_shape(estimated, oracle)
    if not (is_binary(estimated) and is_binary(oracle)):
        raise ValueError("remove_false_reliables needs binary masks")
    return np.minimum(estimated, oracle)


def mask_stats(estimated, oracle) -> MaskStats:
    """Percentage of reliable cells in ``estimated`` and of false reliables.

    Both percentages are taken over all cells.
    """
    estimated, oracle = _same_shape(estimated, oracle)
    total = estimated.size
    est_rel = reliable_cells(estimated)
    false_rel = est_rel & ~reliable_cells(oracle)
    return MaskStats(100.0 * est_rel.sum() / total, 100.0 * false_rel.sum() / total)
