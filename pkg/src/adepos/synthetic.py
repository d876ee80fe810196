"""Deterministic synthetic feature streams with known ground truth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset_io import FeatureTable
from .errors import InvalidSpec
from .features import N_FEATURES, FeatureVector

HEALTHY_MEAN = (0.1, 3.0, 0.9, 4.5, 0.0)
HEALTHY_STD = (0.005, 0.15, 0.05, 0.25, 0.05)
# relative growth per sample once a fault develops; skewness stays put
FAULT_RATE = (1.0, 1.5, 1.2, 0.6, 0.0)


@dataclass(frozen=True)
class Segment:
    length: int
    mean: tuple[float, ...] = HEALTHY_MEAN
    std: tuple[float, ...] = HEALTHY_STD
    faulty: bool = False


@dataclass(frozen=True)
class Drift:
    """Exponential (or linear) departure of the means from sample ``start`` on.

    ``rate`` is per-feature; samples at or after ``start`` are labelled faulty.
    Exponential drift at index ``i`` adds ``|mean| * (exp(rate * t) - 1)``
    with ``t = (i - start) / horizon``; linear drift adds ``|mean| * rate * t``.
    """

    start: int
    rate: tuple[float, ...] = FAULT_RATE
    horizon: int = 10
    kind: str = "exponential"


@dataclass(frozen=True)
class SyntheticSpec:
    segments: tuple[Segment, ...]
    drift: Drift | None = None

    def validate(self):
        if not self.segments:
            raise InvalidSpec("at least one segment is required")
        for s in self.segments:
            if s.length < 1:
                raise InvalidSpec(f"segment length must be >= 1, got {s.length}")
            if len(s.mean) != N_FEATURES or len(s.std) != N_FEATURES:
                raise InvalidSpec("segment mean/std need one entry per feature")
            if any(v < 0 for v in s.std):
                raise InvalidSpec("standard deviations must be >= 0")
        if self.drift is not None:
            dr = self.drift
            if len(dr.rate) != N_FEATURES:
                raise InvalidSpec("drift rate needs one entry per feature")
            if dr.kind not in ("exponential", "linear"):
                raise InvalidSpec(f"unknown drift kind {dr.kind!r}")
            if dr.horizon < 1 or dr.start < 0:
                raise InvalidSpec("drift needs start >= 0 and horizon >= 1")

    @property
    def length(self) -> int:
        return sum(s.length for s in self.segments)


def _clip_physical(X: np.ndarray) -> np.ndarray:
    X = X.copy()
    X[:, 0] = np.maximum(X[:, 0], 1e-9)  # rms
    X[:, 1] = np.maximum(X[:, 1], 1.0)   # raw kurtosis is >= 1
    X[:, 2] = np.maximum(X[:, 2], 1e-9)  # peak-peak
    X[:, 3] = np.maximum(X[:, 3], 1.0)   # crest factor
    return X


def generate_synthetic(spec: SyntheticSpec, seed: int = 0) -> FeatureTable:
    """Sample a labelled feature stream; identical for identical (spec, seed)."""
    spec.validate()
    rng = np.random.default_rng(seed)
    means, stds, faulty = [], [], []
    for s in spec.segments:
        means.append(np.tile(s.mean, (s.length, 1)))
        stds.append(np.tile(s.std, (s.length, 1)))
        faulty.extend([s.faulty] * s.length)
    mean = np.vstack(means).astype(np.float64)
    std = np.vstack(stds).astype(np.float64)
    faulty = np.array(faulty)
    if spec.drift is not None:
        dr = spec.drift
        t = np.maximum(np.arange(len(mean)) - dr.start, 0) / dr.horizon
        rate = np.asarray(dr.rate, dtype=np.float64)
        growth = np.expm1(np.outer(t, rate)) if dr.kind == "exponential" else np.outer(t, rate)
        mean = mean + np.abs(mean) * growth
        faulty = faulty | (np.arange(len(mean)) >= dr.start)
    X = _clip_physical(mean + std * rng.standard_normal(mean.shape))
    labels = ["faulty" if f else "healthy" for f in faulty]
    return FeatureTable([FeatureVector.from_array(row) for row in X], labels)


@dataclass(frozen=True)
class SyntheticBearing:
    bearing_id: str
    faulty: bool
    table: FeatureTable


# Healthy/faulty roster of the three IMS run-to-failure tests
IMS_ROSTER = (
    ("1-1", False), ("1-2", False), ("1-3", True), ("1-4", True),
    ("2-1", True), ("2-2", False), ("2-3", False), ("2-4", False),
    ("3-1", False), ("3-2", False), ("3-3", True), ("3-4", False),
)


def synthetic_fleet(n_samples: int = 400, fault_fraction: float = 0.08, seed: int = 0,
                    roster=IMS_ROSTER) -> list[SyntheticBearing]:
    """Twelve bearings shaped like the IMS roster.

    Every bearing gets its own baseline (sensor placement differs); faulty
    bearings develop an exponential drift over their last ``fault_fraction``
    of samples.
    """
    if n_samples < 10:
        raise InvalidSpec("n_samples must be >= 10")
    if not 0 < fault_fraction < 0.9:
        raise InvalidSpec("fault_fraction must lie in (0, 0.9)")
    rng = np.random.default_rng(seed)
    fleet = []
    for idx, (bid, faulty) in enumerate(roster):
        scale = rng.uniform(0.7, 1.4, N_FEATURES)
        mean = tuple(float(m * s) for m, s in zip(HEALTHY_MEAN, scale))
        std = tuple(float(v * s) for v, s in zip(HEALTHY_STD, scale))
        drift = None
        if faulty:
            start = int(round(n_samples * (1 - fault_fraction)))
            drift = Drift(start=start, horizon=max(1, (n_samples - start) // 3))
        spec = SyntheticSpec((Segment(n_samples, mean, std),), drift)
        fleet.append(SyntheticBearing(bid, faulty, generate_synthetic(spec, seed * 1000 + idx)))
    return fleet
