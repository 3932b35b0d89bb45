"""Synthetic speech-like spectrograms, noise and waveforms.

Utterances are sequences of "word" templates: a few formant-like ridges that
drift in frequency under a rise-and-fall energy envelope. The same small
template inventory recurs across utterances, which gives exemplar fragments
something to match, much like a digit vocabulary. Log-power values are offset
by ``level`` (default 12 nats) so they sit in the positive range a front end
produces from int16-scaled audio. Everything is seeded.
"""
from __future__ import annotations

import numpy as np

from pathlib import Path

from .features import AudioClip
from .spim import write_spim

FLOOR = 1e-10
LEVEL = 12.0


def word_templates(K: int, n_words: int = 11, min_frames: int = 20, max_frames: int = 50,
                   seed: int = 0) -> list[np.ndarray]:
    """Linear-power ``(K, length)`` templates for a small vocabulary."""
    rng = np.random.default_rng(seed)
    bands = np.arange(K)[:, None]
    out = []
    for _ in range(n_words):
        n = int(rng.integers(min_frames, max_frames + 1))
        t = np.linspace(0.0, 1.0, n)[None, :]
        power = np.zeros((K, n))
        for _ in range(int(rng.integers(2, 4))):
            start, end = rng.uniform(0.05, 0.95, 2) * (K - 1)
            centre = start + (end - start) * t
            width = rng.uniform(0.6, 1.8)
            power += rng.uniform(0.5, 2.0) * np.exp(-0.5 * ((bands - centre) / width) ** 2)
        envelope = np.sin(np.pi * t) ** rng.uniform(0.5, 1.5)
        out.append(power * envelope + 1e-3)
    return out


def utterance(templates, n_words: int, rng, gap_frames=(2, 8), level: float = LEVEL) -> np.ndarray:
    """Log-power spectrogram of ``n_words`` random templates with short pauses."""
    K = templates[0].shape[0]
    pieces = [np.full((K, int(rng.integers(*gap_frames))), 1e-3)]
    for w in rng.integers(len(templates), size=n_words):
        pieces.append(templates[w])
        pieces.append(np.full((K, int(rng.integers(*gap_frames))), 1e-3))
    return np.log(np.maximum(np.hstack(pieces), FLOOR)) + level


def speech_corpus(n_utterances: int, K: int = 23, words=(2, 4), n_vocab: int = 11,
                  seed: int = 0, template_seed: int = 0, level: float = LEVEL) -> list[np.ndarray]:
    templates = word_templates(K, n_vocab, seed=template_seed)
    rng = np.random.default_rng(seed)
    return [utterance(templates, int(rng.integers(words[0], words[1] + 1)), rng, level=level)
            for _ in range(n_utterances)]


def noise_spectrogram(K: int, T: int, kind: str = "stationary", seed: int = 0,
                      level: float = LEVEL) -> np.ndarray:
    """Log-power noise with a sloped spectrum.

    ``stationary`` has chi-square cell fluctuations only; ``babble`` adds a
    slow random modulation; ``bursty`` adds sparse broadband bursts.
    """
    rng = np.random.default_rng(seed)
    tilt = np.exp(-np.linspace(0.0, 2.0, K))[:, None]
    power = tilt * rng.gamma(2.0, 0.5, size=(K, T))
    if kind == "babble":
        power *= np.exp(np.convolve(rng.standard_normal(T), np.ones(5) / 5, "same"))[None, :]
    elif kind == "bursty":
        bursts = rng.random(T) < 0.1
        power[:, bursts] *= rng.uniform(3.0, 10.0, size=bursts.sum())
    elif kind != "stationary":
        raise ValueError(f"unknown noise kind {kind!r}")
    return np.log(np.maximum(power, FLOOR)) + level


NOISE_KINDS = ("stationary", "babble", "bursty")


def speech_wave(duration: float = 1.0, sample_rate: int = 8000, seed: int = 0) -> AudioClip:
    """Harmonic tone complex with a gliding pitch and syllable-rate envelope."""
    rng = np.random.default_rng(seed)
    t = np.arange(int(duration * sample_rate)) / sample_rate
    f0 = rng.uniform(100, 200) * (1.0 + 0.2 * np.sin(2 * np.pi * rng.uniform(0.5, 2.0) * t))
    phase = 2 * np.pi * np.cumsum(f0) / sample_rate
    x = sum(np.sin(h * phase) / h for h in range(1, 16) if h * f0.max() < sample_rate / 2)
    envelope = 0.5 * (1 - np.cos(2 * np.pi * rng.uniform(2.0, 4.0) * t))
    return AudioClip(0.1 * x * envelope, sample_rate)


def noise_wave(duration: float = 1.0, sample_rate: int = 8000, seed: int = 0) -> AudioClip:
    rng = np.random.default_rng(seed)
    return AudioClip(0.05 * rng.standard_normal(int(duration * sample_rate)), sample_rate)


def write_corpus(root, n_test: int = 50, n_train: int = 200, K: int = 23,
                 noise_kinds=NOISE_KINDS, noise_frames: int = 3000, seed: int = 0) -> dict:
    """Write a SPIM corpus under ``root``: ``train/``, ``test/`` and ``noise/<kind>.spim``.

    Train and test utterances share one template vocabulary but use disjoint
    random streams. Returns the paths in the layout a sweep config expects.
    """
    root = Path(root)
    (root / "train").mkdir(parents=True, exist_ok=True)
    (root / "test").mkdir(exist_ok=True)
    (root / "noise").mkdir(exist_ok=True)
    for sub, n, s in (("train", n_train, seed), ("test", n_test, seed + 1)):
        for i, spec in enumerate(speech_corpus(n, K, seed=s, template_seed=seed)):
            write_spim(root / sub / f"{sub}{i:04d}.spim", spec)
    noise = {}
    for j, kind in enumerate(noise_kinds):
        p = root / "noise" / f"{kind}.spim"
        write_spim(p, noise_spectrogram(K, noise_frames, kind, seed=seed + 100 + j))
        noise[kind] = str(p)
    return {"train": str(root / "train"), "speech": str(root / "test"), "noise": noise}
