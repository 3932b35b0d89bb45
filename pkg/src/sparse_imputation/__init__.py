"""Sparse imputation of noise-corrupted spectrogram cells.

Unreliable time-frequency cells of a noisy mel log-power spectrogram are
replaced by reconstructions from a sparse, non-negative combination of clean
exemplar fragments, fitted on the reliable cells of overlapping windows.
"""
from .config import PipelineConfig, load_config
from .dictionary import Dictionary, build_dictionary, flatten_fragment, unflatten_fragment
from .features import AudioClip, FrontendConfig, additive_spectrogram_mix, log_mel, mix_at_snr
from .evaluation import ImputationMetrics, SweepReport, run_sweep, score
from .imputation import (ImputationResult, WindowPlan, bounded_clamp, impute_sliding,
                         impute_whole, plan_windows)
from .masks import MaskStats, mask_stats, oracle_mask, remove_false_reliables, threshold_mask
from .solver import SolveProblem, SolveResult, kkt_check, lambda_max, solve, solve_path

__all__ = [
    "AudioClip", "Dictionary", "FrontendConfig", "ImputationMetrics", "ImputationResult",
    "MaskStats", "PipelineConfig", "SolveProblem", "SolveResult", "SweepReport", "WindowPlan", "additive_spectrogram_mix",
    "bounded_clamp", "build_dictionary", "flatten_fragment", "impute_sliding",
    "impute_whole", "kkt_check", "lambda_max", "load_config", "log_mel", "mask_stats",
    "mix_at_snr", "oracle_mask", "plan_windows", "remove_false_reliables", "run_sweep",
    "score", "solve", "solve_path",
    "threshold_mask", "unflatten_fragment",
]
