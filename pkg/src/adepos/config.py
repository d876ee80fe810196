"""Experiment configuration, read from and written to YAML."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError
from .power import PerOpCost

SOURCES = ("synthetic", "ims", "features")


@dataclass
class ExperimentConfig:
    source: str = "synthetic"
    dataset_root: str | None = None
    ims_datasets: list[str] = field(default_factory=lambda: ["1", "2", "3"])
    ims_dirs: dict[str, str] = field(default_factory=dict)
    channel_reduce: str = "first"
    features_dir: str | None = None
    d: int = 5
    L: int = 20
    n_max: int = 9
    seeds: list[int] = field(default_factory=lambda: list(range(10)))
    c: float = 1.0
    train_fraction: float = 0.1
    quant_margin: float = 1.0
    mode: str = "boundary"
    method: str = "opium"
    theta_update: str = "literal"
    C: float = 1.0
    R: float = 1.0
    epochs: int = 1
    convergence_tol: float | None = None
    convergence_window: int = 50
    neuron_gen: bool = False
    fixed_point: bool = False
    initial_active: int = 1
    halt_on_alarm: bool = False
    cost_mac: float = 1.0
    cost_add_sub: float = 1.0
    synthetic_samples: int = 400
    synthetic_fault_fraction: float = 0.08
    synthetic_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.source not in SOURCES:
            raise ConfigError(f"source must be one of {SOURCES}, got {self.source!r}")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if self.d != 5:
            raise ConfigError("the feature pipeline produces d=5 inputs")
        if self.L < 1:
            raise ConfigError("L must be >= 1")
        if self.n_max < 1 or self.n_max % 2 == 0:
            raise ConfigError("n_max must be odd and >= 1")
        if self.initial_active < 1 or self.initial_active > self.n_max or self.initial_active % 2 == 0:
            raise ConfigError("initial_active must be odd and within [1, n_max]")
        if self.c < 0:
            raise ConfigError("c must be >= 0")
        if self.quant_margin < 0:
            raise ConfigError("quant_margin must be >= 0")
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train_fraction must lie in (0, 1)")
        if self.mode not in ("boundary", "autoencoder"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.method not in ("opium", "batch"):
            raise ConfigError(f"unknown method {self.method!r}")
        if self.theta_update not in ("literal", "rls"):
            raise ConfigError(f"unknown theta_update {self.theta_update!r}")
        if self.fixed_point and self.mode != "boundary":
            raise ConfigError("fixed_point requires boundary mode")
        if self.channel_reduce not in ("first", "mean"):
            raise ConfigError("channel_reduce must be 'first' or 'mean'")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")

    @property
    def costs(self) -> PerOpCost:
        return PerOpCost(self.cost_mac, self.cost_add_sub)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def replace(self, **changes) -> "ExperimentConfig":
        return self.from_dict({**self.to_dict(), **changes})


def load_config(path) -> ExperimentConfig:
    try:
        raw = yaml.safe_load(Path(path).read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return ExperimentConfig.from_dict(raw)


def dump_config(cfg: ExperimentConfig) -> str:
    return "# adepos experiment config v1\n" + yaml.safe_dump(cfg.to_dict(), sort_keys=True)


def parse_override(text: str) -> tuple[str, object]:
    """``key=value`` with the value parsed as YAML (so ``seeds=[1,2]`` works)."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, value = text.split("=", 1)
    return key.strip(), yaml.safe_load(value)
