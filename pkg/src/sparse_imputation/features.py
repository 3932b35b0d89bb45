"""Mel log-power front end, WAV I/O and noise mixing.

Spectrograms are plain ``(K, T)`` float arrays holding the natural log of mel
band energy. Nothing here does pre-emphasis, cepstra or deltas.
"""
from __future__ import annotations

import os
import struct
import wave
from dataclasses import dataclass

import numpy as np


class InsufficientAudioError(ValueError):
    pass


class MalformedWavError(ValueError):
    pass


@dataclass(frozen=True)
class AudioClip:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("audio clip must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(samples)):
            raise ValueError("audio clip contains non-finite samples")
        if int(self.sample_rate) <= 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.size

    @property
    def power(self) -> float:
        """Mean squared amplitude."""
        return float(np.mean(self.samples ** 2))


@dataclass(frozen=True)
class FrontendConfig:
    """Frame geometry and filterbank size.

    Defaults follow the usual 8 kHz digit-recognition front end: 25 ms Hamming
    frames every 10 ms, 23 mel bands, a 256 point FFT.
    """
    frame_length: float = 25.0  # ms
    frame_shift: float = 10.0  # ms
    band_count: int = 23
    fft_size: int = 256
    energy_floor: float = 1e-10
    low_freq: float = 64.0  # Hz
    high_freq: float | None = None  # Hz, None -> Nyquist

    def __post_init__(self):
        if self.frame_length <= 0 or self.frame_shift <= 0:
            raise ValueError("frame length and shift must be positive")
        if self.frame_shift > self.frame_length:
            raise ValueError("frame_shift must not exceed frame_length")
        if self.band_count < 1:
            raise ValueError("band_count must be >= 1")
        if self.energy_floor <= 0:
            raise ValueError("energy_floor must be > 0")

    def frame_samples(self, sample_rate: int) -> int:
        return int(round(self.frame_length * sample_rate / 1000.0))

    def shift_samples(self, sample_rate: int) -> int:
        return int(round(self.frame_shift * sample_rate / 1000.0))

    @property
    def log_floor(self) -> float:
        return float(np.log(self.energy_floor))


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_center_frequencies(band_count, low_freq, high_freq):
    """Centres of ``band_count`` triangles spaced evenly on the mel scale."""
    edges = mel_to_hz(np.linspace(hz_to_mel(low_freq), hz_to_mel(high_freq),
                                  band_count + 2))
    return edges[1:-1]


def mel_filterbank(sample_rate: int, fft_size: int, band_count: int,
                   low_freq: float = 64.0, high_freq: float | None = None) -> np.ndarray:
    """Triangular mel filterbank of shape ``(band_count, fft_size // 2 + 1)``.

    Triangles have unit peak and are evaluated at the exact bin frequencies.
    """
    if high_freq is None:
        high_freq = sample_rate / 2.0
    if not 0 <= low_freq < high_freq <= sample_rate / 2.0:
        raise ValueError("need 0 <= low_freq < high_freq <= Nyquist")
    edges = mel_to_hz(np.linspace(hz_to_mel(low_freq), hz_to_mel(high_freq),
                                  band_count + 2))
    bins = np.arange(fft_size // 2 + 1) * sample_rate / fft_size
    lower, centre, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (bins - lower) / (centre - lower)
    falling = (upper - bins) / (upper - centre)
    return np.maximum(0.0, np.minimum(rising, falling))


def frame_count(num_samples: int, frame_samples: int, shift_samples: int) -> int:
    if num_samples < frame_samples:
        return 0
    return (num_samples - frame_samples) // shift_samples + 1


def log_mel(clip: AudioClip, cfg: FrontendConfig = FrontendConfig()) -> np.ndarray:
    """Mel log-power spectrogram of ``clip`` with shape ``(K, T)``.

    Frames are taken without padding, so
    ``T = (num_samples - frame_samples) // shift_samples + 1``.
    Band energies are floored at ``cfg.energy_floor`` before the natural log.
    """
    sr = clip.sample_rate
    n_frame = cfg.frame_samples(sr)
    n_shift = cfg.shift_samples(sr)
    if n_frame > cfg.fft_size:
        raise ValueError(f"frame of {n_frame} samples exceeds fft_size {cfg.fft_size}")
    T = frame_count(len(clip), n_frame, n_shift)
    if T < 1:
        raise InsufficientAudioError(
            f"insufficient audio: {len(clip)} samples, one frame needs {n_frame}")

    idx = np.arange(n_frame)[None, :] + n_shift * np.arange(T)[:, None]
    frames = clip.samples[idx] * np.hamming(n_frame)
    power = np.abs(np.fft.rfft(frames, n=cfg.fft_size, axis=1)) ** 2
    fb = mel_filterbank(sr, cfg.fft_size, cfg.band_count, cfg.low_freq, cfg.high_freq)
    energy = fb @ power.T
    return np.log(np.maximum(energy, cfg.energy_floor))


def mix_at_snr(speech: AudioClip, noise: AudioClip, snr_db: float):
    """Add ``noise`` to ``speech`` at ``snr_db``.

    The noise is truncated to the speech length and scaled by
    ``sqrt(P_speech / (P_noise * 10**(snr_db / 10)))``. Returns the mixture and
    the scale factor.
    """
    if speech.sample_rate != noise.sample_rate:
        raise ValueError("sample rates differ")
    if len(noise) < len(speech):
        raise ValueError("noise is shorter than speech")
    n = noise.samples[:len(speech)]
    p_speech = speech.power
    p_noise = float(np.mean(n ** 2))
    if p_speech <= 0.0 or p_noise <= 0.0:
        raise ValueError("degenerate power: speech or noise is silent")
    scale = float(np.sqrt(p_speech / (p_noise * 10.0 ** (snr_db / 10.0))))
    return AudioClip(speech.samples + scale * n, speech.sample_rate), scale


def additive_spectrogram_mix(S: np.ndarray, N: np.ndarray) -> np.ndarray:
    """Sum two log-power spectrograms in the linear power domain."""
    S = np.asarray(S, dtype=np.float64)
    N = np.asarray(N, dtype=np.float64)
    if S.shape != N.shape:
        raise ValueError(f"shape mismatch {S.shape} vs {N.shape}")
    return np.logaddexp(S, N)


def read_wav(path: str | os.PathLike) -> AudioClip:
    """Read a mono 16-bit PCM WAV, scaled to [-1, 1)."""
    try:
        with wave.open(os.fspath(path), "rb") as wf:
            channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            n = wf.getnframes()
            raw = wf.readframes(n)
    except (wave.Error, EOFError, struct.error) as exc:
        raise MalformedWavError(f"malformed WAV {path}: {exc}") from exc
    if channels != 1 or width != 2:
        raise MalformedWavError(
            f"malformed WAV {path}: need mono 16-bit PCM, got {channels} ch / {8 * width} bit")
    if len(raw) != 2 * n or n == 0:
        raise MalformedWavError(f"malformed WAV {path}: truncated sample data")
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return AudioClip(samples, rate)


def write_wav(path: str | os.PathLike, clip: AudioClip) -> None:
    """Write ``clip`` as mono 16-bit PCM; samples outside [-1, 1) are clipped."""
    pcm = np.clip(np.round(clip.samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(os.fspath(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(clip.sample_rate)
        wf.writeframes(pcm.tobytes())



def scale_noise_to_snr(S: np.ndarray, N: np.ndarray, snr_db: float):
    """Shift log-power noise ``N`` so that mean linear power of ``S`` over ``N``
    is ``snr_db``. Returns the shifted noise and the linear power gain."""
    S, N = np.asarray(S, dtype=np.float64), np.asarray(N, dtype=np.float64)
    if S.shape != N.shape:
        raise ValueError(f"shape mismatch {S.shape} vs {N.shape}")
    log_ps = logmeanexp(S)
    log_pn = logmeanexp(N)
    log_gain = log_ps - log_pn - snr_db * np.log(10.0) / 10.0
    return N + log_gain, float(np.exp(log_gain))


def logmeanexp(a) -> float:
    a = np.asarray(a, dtype=np.float64)
    peak = a.max()
    return float(peak + np.log(np.mean(np.exp(a - peak))))
