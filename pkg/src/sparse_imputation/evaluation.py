"""Reconstruction metrics and window-shift / SNR / mask sweeps.

Recognition accuracy needs a full recogniser, so imputation quality is scored
directly against the clean spectrogram instead. The working assumption is that
a better reconstruction of the unreliable cells means better recognition.
"""
from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .dictionary import build_dictionary, load_dictionary
from .features import (AudioClip, MalformedWavError, additive_spectrogram_mix, log_mel,
                       mix_at_snr, read_wav, scale_noise_to_snr)
from .imputation import bounded_clamp, impute_sliding
from .masks import (mask_stats, peak_noise_estimate, oracle_mask, reliable_cells,
                    remove_false_reliables, threshold_mask)
from .spim import SpimFormatError, read_spim

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "noise_type", "snr_db", "mask_type", "shift_frames", "n_utterances",
    "unreliable_rmse", "overall_rmse", "imputation_snr_db",
    "reliable_cells", "unreliable_cells", "reliable_pct", "false_reliable_pct",
)


class CorpusNotFoundError(FileNotFoundError):
    pass


@dataclass(frozen=True)
class ImputationMetrics:
    unreliable_rmse: float | None
    overall_rmse: float
    imputation_snr_db: float | None
    reliable_cells: int
    unreliable_cells: int


def score(truth, imputed, mask, energy_floor: float = 1e-10) -> ImputationMetrics:
    """Compare an imputed log-power spectrogram against the clean one.

    RMSEs are in log units. The SNR is computed in the linear power domain over
    unreliable cells, skipping cells where the truth sits at the energy floor.
    Unreliable metrics are None when the mask has no unreliable cell.
    """
    truth = np.asarray(truth, dtype=np.float64)
    imputed = np.asarray(imputed, dtype=np.float64)
    if truth.shape != imputed.shape or np.shape(mask) != truth.shape:
        raise ValueError("truth, imputed and mask must share one shape")
    unreliable = ~reliable_cells(mask)
    err = imputed - truth
    overall = float(np.sqrt(np.mean(err ** 2)))
    n_unrel = int(unreliable.sum())
    if n_unrel == 0:
        return ImputationMetrics(None, overall, None, truth.size, 0)

    unrel_rmse = float(np.sqrt(np.mean(err[unreliable] ** 2)))
    keep = unreliable & (truth > np.log(energy_floor) + 1e-9)
    snr = None
    if keep.any():
        # common rescaling leaves the power ratio unchanged and avoids overflow
        ref = truth[keep].max()
        s_lin = np.exp(truth[keep] - ref)
        e_lin = s_lin - np.exp(imputed[keep] - ref)
        den = float(np.sum(e_lin ** 2))
        snr = float("inf") if den == 0 else float(10 * np.log10(np.sum(s_lin ** 2) / den))
    return ImputationMetrics(unrel_rmse, overall, snr, truth.size - n_unrel, n_unrel)


@dataclass
class SweepRow:
    noise_type: str
    snr_db: float
    mask_type: str
    shift_frames: int
    n_utterances: int
    unreliable_rmse: float | None
    overall_rmse: float
    imputation_snr_db: float | None
    reliable_cells: int
    unreliable_cells: int
    reliable_pct: float
    false_reliable_pct: float
    per_utterance: list = field(default_factory=list, repr=False)

    def csv_fields(self) -> list[str]:
        def num(v):
            return "nan" if v is None else f"{v:.6f}"
        return [self.noise_type, num(self.snr_db), self.mask_type, str(self.shift_frames),
                str(self.n_utterances), num(self.unreliable_rmse), num(self.overall_rmse),
                num(self.imputation_snr_db), str(self.reliable_cells),
                str(self.unreliable_cells), num(self.reliable_pct),
                num(self.false_reliable_pct)]


@dataclass
class SweepReport:
    rows: list

    def write_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in self.rows:
                writer.writerow(row.csv_fields())

    def row(self, **where) -> SweepRow:
        hits = [r for r in self.rows if all(getattr(r, k) == v for k, v in where.items())]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} rows match {where}")
        return hits[0]


def _mean(values):
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


def aggregate(noise_type, snr_db, mask_type, shift, per_utt) -> SweepRow:
    """Average per-utterance ``(ImputationMetrics, MaskStats)`` pairs into one row.

    Metrics and percentages are means over utterances; cell counts are totals.
    """
    metrics = [m for m, _ in per_utt]
    stats = [s for _, s in per_utt]
    return SweepRow(
        noise_type, float(snr_db), mask_type, int(shift), len(per_utt),
        _mean([m.unreliable_rmse for m in metrics]),
        _mean([m.overall_rmse for m in metrics]),
        _mean([m.imputation_snr_db for m in metrics]),
        int(sum(m.reliable_cells for m in metrics)),
        int(sum(m.unreliable_cells for m in metrics)),
        _mean([s.reliable_pct for s in stats]),
        _mean([s.false_reliable_pct for s in stats]),
        per_utt,
    )


# corpus loading -------------------------------------------------------------

AUDIO_SUFFIXES = {".wav"}
SPEC_SUFFIXES = {".spim"}


def _load_entry(path: Path):
    if path.suffix.lower() in AUDIO_SUFFIXES:
        return read_wav(path)
    return read_spim(path)


def load_entries(path: str | os.PathLike) -> list[tuple[str, object]]:
    """Load every ``.wav`` (as AudioClip) or ``.spim`` (as K x T array) under ``path``.

    ``path`` may be a single file. Unreadable files are skipped with a warning;
    a missing path or one where nothing loads raises CorpusNotFoundError.
    """
    path = Path(path)
    if not path.exists():
        raise CorpusNotFoundError(f"corpus path not found: {path}")
    files = [path] if path.is_file() else sorted(
        p for p in path.iterdir() if p.suffix.lower() in AUDIO_SUFFIXES | SPEC_SUFFIXES)
    entries = []
    for p in files:
        try:
            entries.append((p.stem, _load_entry(p)))
        except (MalformedWavError, SpimFormatError, OSError, ValueError) as exc:
            log.warning("skipping unreadable corpus entry %s: %s", p, exc)
    if not entries:
        raise CorpusNotFoundError(f"no readable utterances under {path}")
    return entries


def as_spectrogram(entry, cfg: PipelineConfig) -> np.ndarray:
    if isinstance(entry, AudioClip):
        return log_mel(entry, cfg.frontend)
    return np.asarray(entry, dtype=np.float64)


def mix_waveforms(speech: AudioClip, noise: AudioClip, snr_db: float, rng):
    """Mix a random noise segment into ``speech``; returns (mixture, scaled noise)."""
    if len(noise) < len(speech):
        raise ValueError("noise recording shorter than speech")
    start = int(rng.integers(len(noise) - len(speech) + 1))
    seg = AudioClip(noise.samples[start:start + len(speech)], noise.sample_rate)
    mixed, scale = mix_at_snr(speech, seg, snr_db)
    return mixed, AudioClip(scale * seg.samples, seg.sample_rate)


def mix_utterance(speech, noise, snr_db: float, cfg: PipelineConfig, rng):
    """Return ``(S, N, Y)`` log-power spectrograms for one noisy utterance.

    Mixes waveforms when both inputs are audio, otherwise mixes spectrograms.
    A random segment of the noise of matching length is used.
    """
    if isinstance(speech, AudioClip) and isinstance(noise, AudioClip):
        mixed, scaled = mix_waveforms(speech, noise, snr_db, rng)
        fe = cfg.frontend
        return log_mel(speech, fe), log_mel(scaled, fe), log_mel(mixed, fe)
    S = as_spectrogram(speech, cfg)
    N_full = as_spectrogram(noise, cfg)
    if N_full.shape[0] != S.shape[0] or N_full.shape[1] < S.shape[1]:
        raise ValueError("noise spectrogram too short or band count differs")
    start = int(rng.integers(N_full.shape[1] - S.shape[1] + 1))
    N, _ = scale_noise_to_snr(S, N_full[:, start:start + S.shape[1]], snr_db)
    return S, N, additive_spectrogram_mix(S, N)


def make_masks(S, N, Y, mask_types, threshold_db: float) -> dict:
    oracle = oracle_mask(S, N)
    out = {"oracle": oracle}
    if {"threshold", "corrected"} & set(mask_types):
        est = threshold_mask(Y, peak_noise_estimate(N), threshold_db)
        out["threshold"] = est
        out["corrected"] = remove_false_reliables(est, oracle)
    return {k: out[k] for k in mask_types}


def _dictionary_for(cfg: PipelineConfig):
    sw = cfg.sweep
    if sw.dictionary:
        if not Path(sw.dictionary).exists():
            raise CorpusNotFoundError(f"dictionary not found: {sw.dictionary}")
        return load_dictionary(sw.dictionary)
    if not sw.train:
        raise ValueError("sweep needs either a dictionary or a train corpus")
    entries = load_entries(sw.train)
    specs = [as_spectrogram(e, cfg) for _, e in entries]
    d = cfg.dictionary
    return build_dictionary(specs, d.n_atoms, d.fragment_frames, d.seed,
                            ids=[i for i, _ in entries])


def run_sweep(cfg: PipelineConfig, dictionary=None) -> SweepReport:
    """Mix, mask, impute and score every configuration in ``cfg.sweep``.

    Rows come out sorted by (mask type, SNR, shift, noise type).
    """
    sw = cfg.sweep
    if not sw.speech:
        raise ValueError("sweep.speech is not set")
    if not sw.noise:
        raise ValueError("sweep.noise is empty")
    speech = load_entries(sw.speech)
    noises = {name: load_entries(p) for name, p in sw.noise.items()}
    if dictionary is None:
        dictionary = _dictionary_for(cfg)

    rng = np.random.default_rng(sw.seed)
    if sw.subset_fraction < 1:
        n = max(1, int(round(sw.subset_fraction * len(speech))))
        keep = np.sort(rng.choice(len(speech), n, replace=False))
        speech = [speech[i] for i in keep]

    solver = cfg.solver
    cells: dict[tuple, list] = {}
    n_ok = 0
    for ni, (noise_name, noise_entries) in enumerate(noises.items()):
        for ui, (utt_id, utt) in enumerate(speech):
            for snr in sw.snr_db:
                # same noise segment at every SNR, as in a stratified corpus
                urng = np.random.default_rng([sw.seed, ni, ui])
                noise = noise_entries[int(urng.integers(len(noise_entries)))][1]
                try:
                    S, N, Y = mix_utterance(utt, noise, float(snr), cfg, urng)
                except ValueError as exc:
                    log.warning("skipping %s with %s noise: %s", utt_id, noise_name, exc)
                    continue
                n_ok += 1
                masks = make_masks(S, N, Y, sw.mask_types, cfg.masks.threshold_db)
                for mask_type, mask in masks.items():
                    stats = mask_stats(mask, masks.get("oracle", oracle_mask(S, N)))
                    for shift in sw.shifts:
                        res = impute_sliding(Y, mask, dictionary, int(shift), solver.lam,
                                             solver.lambda_ratio, solver.tol, solver.max_iter,
                                             threads=cfg.threads, keep_candidates=False)
                        if cfg.imputation.bounded_clamp:
                            res = bounded_clamp(res, Y, mask)
                        key = (noise_name, float(snr), mask_type, int(shift))
                        cells.setdefault(key, []).append((score(S, res.imputed, mask), stats))
                log.info("done %s noise=%s snr=%s", utt_id, noise_name, snr)
    if n_ok == 0:
        raise RuntimeError("every corpus entry failed; nothing to report")

    order = {m: i for i, m in enumerate(sw.mask_types)}
    keys = sorted(cells, key=lambda k: (order[k[2]], k[1], k[3], k[0]))
    return SweepReport([aggregate(*k, cells[k]) for k in keys])
