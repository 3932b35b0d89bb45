"""Pipeline configuration.

Configs are YAML mappings with one section per stage. Every key is optional
and defaults reproduce the reference setup: 23 mel bands, 35-frame exemplars,
8000 atoms, a one-frame window shift, oracle masks. Unknown keys are errors.

Example::

    dictionary: {n_atoms: 8000, fragment_frames: 35, seed: 0}
    solver: {lambda_ratio: 0.01}
    imputation: {shift_frames: 1, bounded_clamp: false}
    masks: {type: oracle, threshold_db: 0.0}
    sweep:
      speech: corpus/test
      train: corpus/train
      noise: {subway: corpus/noise/subway.spim}
      snr_db: [10, 5, 0, -5]
      shifts: [1, 5, 10, 15, 20, 25, 30, 35]
      mask_types: [oracle, threshold, corrected]
      output: sweep.csv
"""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field

import yaml

from .features import FrontendConfig

DEFAULT_SHIFTS = [1, 5, 10, 15, 20, 25, 30, 35]
DEFAULT_SNRS = [10.0, 5.0, 0.0, -5.0]
MASK_TYPES = ("oracle", "threshold", "corrected")


@dataclass
class DictionaryConfig:
    n_atoms: int = 8000
    fragment_frames: int = 35
    seed: int = 0


@dataclass
class SolverConfig:
    lambda_ratio: float = 0.01  # lam = lambda_ratio * lambda_max per window
    lam: float | None = None  # absolute penalty, overrides lambda_ratio
    tol: float = 1e-6
    max_iter: int | None = None


@dataclass
class ImputationConfig:
    shift_frames: int = 1
    bounded_clamp: bool = False


@dataclass
class MaskConfig:
    type: str = "oracle"
    threshold_db: float = 0.0

    def __post_init__(self):
        if self.type not in MASK_TYPES:
            raise ValueError(f"mask type must be one of {MASK_TYPES}, got {self.type!r}")


@dataclass
class SweepConfig:
    speech: str | None = None  # directory of clean test utterances (.wav or .spim)
    noise: dict = field(default_factory=dict)  # noise type -> file or directory
    train: str | None = None  # clean training utterances for the dictionary
    dictionary: str | None = None  # prebuilt dictionary, used instead of train
    snr_db: list = field(default_factory=lambda: list(DEFAULT_SNRS))
    shifts: list = field(default_factory=lambda: list(DEFAULT_SHIFTS))
    mask_types: list = field(default_factory=lambda: ["oracle"])
    subset_fraction: float = 1.0
    seed: int = 0
    output: str = "sweep.csv"

    def __post_init__(self):
        bad = [m for m in self.mask_types if m not in MASK_TYPES]
        if bad:
            raise ValueError(f"unknown mask types {bad}")
        if not 0 < self.subset_fraction <= 1:
            raise ValueError("subset_fraction must be in (0, 1]")


@dataclass
class PipelineConfig:
    frontend: FrontendConfig = field(default_factory=FrontendConfig)
    dictionary: DictionaryConfig = field(default_factory=DictionaryConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    imputation: ImputationConfig = field(default_factory=ImputationConfig)
    masks: MaskConfig = field(default_factory=MaskConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    threads: int = 1

    @classmethod
    def from_dict(cls, data: dict | None, base_dir: str | os.PathLike | None = None):
        data = dict(data or {})
        sections = {f.name: f for f in dataclasses.fields(cls)}
        unknown = set(data) - set(sections)
        if unknown:
            raise ValueError(f"unknown config sections: {sorted(unknown)}")
        kwargs = {}
        for name, f in sections.items():
            if name not in data:
                continue
            if name == "threads":
                kwargs[name] = int(data[name])
                continue
            section_cls = f.default_factory().__class__
            kwargs[name] = _build(section_cls, data[name], name)
        cfg = cls(**kwargs)
        if base_dir is not None:
            cfg.sweep = _resolve_paths(cfg.sweep, base_dir)
        return cfg


def _build(section_cls, values, name):
    values = dict(values or {})
    known = {f.name for f in dataclasses.fields(section_cls)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown keys in [{name}]: {sorted(unknown)}")
    return section_cls(**values)


def _resolve_paths(sweep: SweepConfig, base_dir) -> SweepConfig:
    def fix(p):
        if p is None or os.path.isabs(p):
            return p
        return os.path.join(os.fspath(base_dir), p)
    return dataclasses.replace(
        sweep,
        speech=fix(sweep.speech),
        train=fix(sweep.train),
        dictionary=fix(sweep.dictionary),
        output=fix(sweep.output),
        noise={k: fix(v) for k, v in sweep.noise.items()},
    )


def load_config(path: str | os.PathLike | None) -> PipelineConfig:
    """Read a YAML config; relative paths in ``sweep`` resolve against its directory."""
    if path is None:
        return PipelineConfig()
    with open(path) as fh:
        data = yaml.safe_load(fh)
    return PipelineConfig.from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))
