"""Exemplar dictionaries built from random fixed-length spectrogram fragments.

Each atom is a K x R clean-speech fragment flattened frame by frame, so row
``t * K + k`` holds band ``k`` of frame ``t``. Atoms are stored unnormalised:
reconstructions are read back as absolute log-power values.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .spim import read_spim, write_spim

DEFAULT_N_ATOMS = 8000
DEFAULT_FRAGMENT_FRAMES = 35


class CorpusError(ValueError):
    pass


class ShortCorpusError(CorpusError):
    pass


@dataclass(frozen=True)
class Dictionary:
    atoms: np.ndarray  # (L, N_A), L = K * R
    K: int
    R: int
    seed: int | None = None
    provenance: list = field(default_factory=list)  # [(utterance id, frame offset), ...]

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=np.float64)
        if atoms.ndim != 2 or atoms.shape[1] < 1:
            raise ValueError("atoms must be an L x N_A matrix with N_A >= 1")
        if atoms.shape[0] != self.K * self.R:
            raise ValueError(f"atom length {atoms.shape[0]} != K*R = {self.K * self.R}")
        if not np.all(np.isfinite(atoms)):
            raise ValueError("atoms contain non-finite values")
        atoms.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)

    @property
    def L(self) -> int:
        return self.atoms.shape[0]

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[1]

    def atom_fragment(self, n: int) -> np.ndarray:
        return unflatten_fragment(self.atoms[:, n], self.K)

    def manifest(self) -> dict:
        return {
            "seed": self.seed,
            "K": self.K,
            "R": self.R,
            "N_A": self.n_atoms,
            "provenance": [[str(u), int(o)] for u, o in self.provenance],
        }


def flatten_fragment(spec: np.ndarray, offset_frame: int, R: int) -> np.ndarray:
    """Concatenate frames ``offset_frame .. offset_frame + R - 1`` into one vector."""
    spec = np.asarray(spec, dtype=np.float64)
    T = spec.shape[1]
    if R < 1 or offset_frame < 0 or offset_frame + R > T:
        raise IndexError(f"fragment [{offset_frame}, {offset_frame + R}) outside {T} frames")
    return spec[:, offset_frame:offset_frame + R].ravel(order="F")


def unflatten_fragment(vec: np.ndarray, K: int) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float64)
    if vec.size % K:
        raise ValueError(f"length {vec.size} is not a multiple of K={K}")
    return vec.reshape((K, vec.size // K), order="F")


def build_dictionary(corpus: Sequence[np.ndarray],
                     n_atoms: int = DEFAULT_N_ATOMS,
                     fragment_frames: int = DEFAULT_FRAGMENT_FRAMES,
                     seed: int = 0,
                     ids: Sequence[str] | None = None) -> Dictionary:
    """Sample ``n_atoms`` fragments of ``fragment_frames`` frames from ``corpus``.

    Utterances are drawn uniformly with replacement from those with at least
    ``fragment_frames`` frames, then a start frame is drawn uniformly from the
    valid offsets. Uses numpy's PCG64 generator seeded with ``seed``.
    """
    if len(corpus) == 0:
        raise CorpusError("corpus is empty")
    if n_atoms < 1:
        raise ValueError("n_atoms must be >= 1")
    R = int(fragment_frames)
    ids = [str(i) for i in range(len(corpus))] if ids is None else [str(i) for i in ids]
    if len(ids) != len(corpus):
        raise ValueError("ids and corpus differ in length")

    specs = [np.asarray(s, dtype=np.float64) for s in corpus]
    K = specs[0].shape[0]
    if any(s.ndim != 2 or s.shape[0] != K for s in specs):
        raise CorpusError("all corpus spectrograms must share the same band count")
    eligible = [i for i, s in enumerate(specs) if s.shape[1] >= R]
    if not eligible:
        raise ShortCorpusError(f"no utterance long enough for fragments of {R} frames")

    rng = np.random.default_rng(seed)
    atoms = np.empty((K * R, n_atoms), order="F")
    provenance = []
    for n in range(n_atoms):
        u = eligible[rng.integers(len(eligible))]
        offset = int(rng.integers(specs[u].shape[1] - R + 1))
        atoms[:, n] = flatten_fragment(specs[u], offset, R)
        provenance.append((ids[u], offset))
    return Dictionary(atoms, K, R, seed, provenance)


def manifest_path(path: str | os.PathLike) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def save_dictionary(dictionary: Dictionary, path: str | os.PathLike) -> None:
    """Write the atom matrix as SPIM and the manifest as ``<path>.json``."""
    write_spim(path, dictionary.atoms)
    with open(manifest_path(path), "w") as fh:
        json.dump(dictionary.manifest(), fh, indent=1)
        fh.write("\n")


def load_dictionary(path: str | os.PathLike) -> Dictionary:
    atoms = read_spim(path)
    with open(manifest_path(path)) as fh:
        meta = json.load(fh)
    if meta["N_A"] != atoms.shape[1]:
        raise ValueError("manifest atom count does not match the matrix")
    provenance = [(u, int(o)) for u, o in meta.get("provenance", [])]
    return Dictionary(atoms, int(meta["K"]), int(meta["R"]), meta.get("seed"), provenance)
