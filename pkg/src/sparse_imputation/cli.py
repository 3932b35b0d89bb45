"""Command-line front end: ``sparse-impute <command> ...``.

Data goes to files, messages to stderr. Exit codes: 0 success, 1 other
failure, 2 malformed WAV (or bad usage), 3 no utterance long enough for an
exemplar, 4 corpus path missing.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import tempfile
from contextlib import contextmanager

import numpy as np

from .config import MASK_TYPES, PipelineConfig, load_config
from .dictionary import (CorpusError, ShortCorpusError, build_dictionary, load_dictionary,
                         save_dictionary)
from .evaluation import (CorpusNotFoundError, as_spectrogram, load_entries, mix_utterance,
                         mix_waveforms, run_sweep, score)
from .features import AudioClip, InsufficientAudioError, MalformedWavError, log_mel, read_wav, write_wav
from .imputation import bounded_clamp, impute_sliding
from .masks import peak_noise_estimate, oracle_mask, remove_false_reliables, threshold_mask
from .spim import SpimFormatError, read_spim, write_spim

log = logging.getLogger("sparse_imputation")

EXIT_OK, EXIT_FAIL, EXIT_WAV, EXIT_SHORT, EXIT_MISSING = 0, 1, 2, 3, 4


@contextmanager
def _atomic(path):
    """Yield a temporary path that replaces ``path`` only on success."""
    path = os.fspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)) or ".",
                               suffix=os.path.splitext(path)[1])
    os.close(fd)
    try:
        yield tmp
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


def _write_spim(path, matrix):
    with _atomic(path) as tmp:
        write_spim(tmp, matrix)


def _load_input(path):
    """A .wav becomes an AudioClip, anything else is read as SPIM."""
    if os.fspath(path).lower().endswith(".wav"):
        return read_wav(path)
    return read_spim(path)


def cmd_features(args, cfg: PipelineConfig):
    spec = log_mel(read_wav(args.input), cfg.frontend)
    _write_spim(args.output, spec)
    log.info("wrote %s: %d bands x %d frames", args.output, *spec.shape)


def cmd_mix(args, cfg: PipelineConfig):
    speech = _load_input(args.speech)
    noise = _load_input(args.noise)
    rng = np.random.default_rng(cfg.sweep.seed)
    audio = isinstance(speech, AudioClip) and isinstance(noise, AudioClip)
    if args.wav_out and not audio:
        raise ValueError("--wav-out needs audio inputs")
    if audio:
        mixed, scaled = mix_waveforms(speech, noise, args.snr, rng)
        fe = cfg.frontend
        S, N, Y = log_mel(speech, fe), log_mel(scaled, fe), log_mel(mixed, fe)
        if args.wav_out:
            with _atomic(args.wav_out) as tmp:
                write_wav(tmp, mixed)
    else:
        S, N, Y = mix_utterance(speech, noise, args.snr, cfg, rng)
    _write_spim(args.noisy, Y)
    if args.clean:
        _write_spim(args.clean, S)
    if args.noise_out:
        _write_spim(args.noise_out, N)


def cmd_mask(args, cfg: PipelineConfig):
    kind = args.type or cfg.masks.type
    threshold_db = cfg.masks.threshold_db if args.threshold_db is None else args.threshold_db
    need = {"oracle": ("clean", "noise"), "threshold": ("noisy",),
            "corrected": ("clean", "noise", "noisy")}[kind]
    missing = [n for n in need if getattr(args, n) is None]
    if missing:
        raise ValueError(f"--type {kind} needs --{' --'.join(missing)}")
    if kind in ("threshold", "corrected") and args.noise is None and args.noise_estimate is None:
        raise ValueError(f"--type {kind} needs --noise or --noise-estimate")

    def estimated():
        n_est = (read_spim(args.noise_estimate) if args.noise_estimate
                 else peak_noise_estimate(read_spim(args.noise)))
        return threshold_mask(read_spim(args.noisy), n_est, threshold_db)

    if kind == "oracle":
        mask = oracle_mask(read_spim(args.clean), read_spim(args.noise))
    elif kind == "threshold":
        mask = estimated()
    else:
        mask = remove_false_reliables(estimated(),
                                      oracle_mask(read_spim(args.clean), read_spim(args.noise)))
    _write_spim(args.output, mask)
    log.info("%s mask: %.1f%% reliable", kind, 100 * mask.mean())


def cmd_build_dict(args, cfg: PipelineConfig):
    entries = load_entries(args.corpus)
    specs = [as_spectrogram(e, cfg) for _, e in entries]
    d = cfg.dictionary
    n_atoms = args.n_atoms or d.n_atoms
    frames = args.frames or d.fragment_frames
    dictionary = build_dictionary(specs, n_atoms, frames, d.seed, ids=[i for i, _ in entries])
    with _atomic(args.output) as tmp:
        save_dictionary(dictionary, tmp)
        os.replace(tmp + ".json", os.fspath(args.output) + ".json")
    log.info("dictionary: K=%d R=%d N_A=%d from %d utterances", dictionary.K, dictionary.R,
             dictionary.n_atoms, len(specs))


def cmd_impute(args, cfg: PipelineConfig):
    Y = read_spim(args.noisy)
    mask = read_spim(args.mask)
    dictionary = load_dictionary(args.dictionary)
    s = cfg.solver
    lam = args.lam if args.lam is not None else s.lam
    ratio = args.lambda_ratio if args.lambda_ratio is not None else s.lambda_ratio
    shift = args.shift or cfg.imputation.shift_frames
    res = impute_sliding(Y, mask, dictionary, shift, lam, ratio, s.tol, s.max_iter,
                         threads=cfg.threads, keep_candidates=False)
    if cfg.imputation.bounded_clamp:
        res = bounded_clamp(res, Y, mask)
    lines = [d.log_line() for d in res.per_window_diag]
    if args.diag_log:
        with _atomic(args.diag_log) as tmp, open(tmp, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    else:
        for line in lines:
            log.info(line)
    if len(res.skipped_windows) == res.window_count:
        log.warning("all windows skipped: no reliable cells, output equals input")
    if res.uncovered.any():
        log.warning("%d unreliable cells had no candidate and keep their observed value",
                    int(res.uncovered.sum()))
    _write_spim(args.output, res.imputed)


def cmd_sweep(args, cfg: PipelineConfig):
    if args.sweep_config:
        cfg = _apply_overrides(load_config(args.sweep_config), args)
    report = run_sweep(cfg)
    out = args.output or cfg.sweep.output
    with _atomic(out) as tmp:
        report.write_csv(tmp)
    log.info("wrote %d rows to %s", len(report.rows), out)


def cmd_score(args, cfg: PipelineConfig):
    m = score(read_spim(args.truth), read_spim(args.imputed), read_spim(args.mask),
              cfg.frontend.energy_floor)
    with _atomic(args.output) as tmp, open(tmp, "w") as fh:
        json.dump(dataclasses.asdict(m), fh, indent=1)
        fh.write("\n")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sparse-impute", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="YAML pipeline config")
    p.add_argument("--seed", type=int, help="overrides dictionary and sweep seeds")
    p.add_argument("--threads", type=int, help="window solves run on this many threads")
    p.add_argument("--bounded-clamp", action="store_true",
                   help="cap unreliable estimates at the observed noisy value")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("features", help="WAV -> mel log-power SPIM")
    s.add_argument("input")
    s.add_argument("output")
    s.set_defaults(func=cmd_features)

    s = sub.add_parser("mix", help="mix speech and noise at a target SNR")
    s.add_argument("speech", help=".wav or .spim")
    s.add_argument("noise", help=".wav or .spim")
    s.add_argument("--snr", type=float, required=True, help="target SNR in dB")
    s.add_argument("--noisy", required=True, help="output noisy spectrogram (SPIM)")
    s.add_argument("--clean", help="output clean spectrogram (SPIM)")
    s.add_argument("--noise-out", help="output scaled noise spectrogram (SPIM)")
    s.add_argument("--wav-out", help="output mixed waveform (audio inputs only)")
    s.set_defaults(func=cmd_mix)

    s = sub.add_parser("mask", help="compute a reliability mask")
    s.add_argument("output")
    s.add_argument("--type", choices=MASK_TYPES)
    s.add_argument("--clean")
    s.add_argument("--noise")
    s.add_argument("--noisy")
    s.add_argument("--noise-estimate")
    s.add_argument("--threshold-db", type=float)
    s.set_defaults(func=cmd_mask)

    s = sub.add_parser("build-dict", help="sample an exemplar dictionary from a corpus")
    s.add_argument("corpus", help="directory of .wav or .spim utterances")
    s.add_argument("output", help="dictionary SPIM; manifest goes to OUTPUT.json")
    s.add_argument("--n-atoms", type=int)
    s.add_argument("--frames", type=int, help="exemplar length R in frames")
    s.set_defaults(func=cmd_build_dict)

    s = sub.add_parser("impute", help="sliding-window sparse imputation")
    s.add_argument("noisy")
    s.add_argument("mask")
    s.add_argument("dictionary")
    s.add_argument("output")
    s.add_argument("--shift", type=int, help="window shift in frames")
    s.add_argument("--lambda", dest="lam", type=float, help="absolute l1 penalty")
    s.add_argument("--lambda-ratio", type=float, help="penalty as a fraction of lambda_max")
    s.add_argument("--diag-log", help="write per-window diagnostics here")
    s.set_defaults(func=cmd_impute)

    s = sub.add_parser("sweep", help="run an SNR / mask / shift sweep, write CSV")
    s.add_argument("sweep_config", nargs="?", help="YAML config (or use --config)")
    s.add_argument("--output", help="CSV path, overrides sweep.output")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("score", help="score an imputed spectrogram against the truth")
    s.add_argument("truth")
    s.add_argument("imputed")
    s.add_argument("mask")
    s.add_argument("output", help="metrics JSON")
    s.set_defaults(func=cmd_score)
    return p


def _apply_overrides(cfg: PipelineConfig, args) -> PipelineConfig:
    if args.seed is not None:
        cfg.dictionary = dataclasses.replace(cfg.dictionary, seed=args.seed)
        cfg.sweep = dataclasses.replace(cfg.sweep, seed=args.seed)
    if args.threads is not None:
        cfg.threads = args.threads
    if args.bounded_clamp:
        cfg.imputation = dataclasses.replace(cfg.imputation, bounded_clamp=True)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        args.func(args, cfg)
    except MalformedWavError as exc:
        log.error("malformed WAV: %s", exc)
        return EXIT_WAV
    except CorpusNotFoundError as exc:
        log.error("%s", exc)
        return EXIT_MISSING
    except ShortCorpusError as exc:
        log.error("%s", exc)
        return EXIT_SHORT
    except (CorpusError, ValueError, OSError, SpimFormatError, InsufficientAudioError, RuntimeError) as exc:
        log.error("%s", exc)
        return EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
