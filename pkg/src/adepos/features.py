"""Time-domain vibration features and their 6-bit quantization."""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateWindow, EmptyTrainingSet

FEATURE_NAMES = ("rms", "kurtosis", "peak_peak", "crest_factor", "skewness")
N_FEATURES = len(FEATURE_NAMES)
QUANT_MAX = 63


@dataclass(frozen=True)
class FeatureVector:
    rms: float
    kurtosis: float
    peak_peak: float
    crest_factor: float
    skewness: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=np.float64)

    @classmethod
    def from_array(cls, values) -> "FeatureVector":
        vals = [float(v) for v in values]
        if len(vals) != N_FEATURES:
            raise ValueError(f"expected {N_FEATURES} feature values, got {len(vals)}")
        return cls(*vals)


def extract_features(window) -> FeatureVector:
    """Compute RMS, raw kurtosis, peak-to-peak, crest factor and skewness.

    Moments are population (1/n) central moments; kurtosis is m4/m2**2 without
    the -3 excess correction and the crest factor uses max(|x|) as the peak.
    """
    x = np.asarray(window, dtype=np.float64).ravel()
    if x.size < 2:
        raise DegenerateWindow(f"window needs at least 2 samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DegenerateWindow("window contains non-finite samples")

    rms = math.sqrt(float(np.mean(x * x)))
    dev = x - x.mean()
    m2 = float(np.mean(dev**2))
    if rms == 0.0 or m2 == 0.0:
        raise DegenerateWindow("window has zero variance or zero RMS")
    m3 = float(np.mean(dev**3))
    m4 = float(np.mean(dev**4))
    return FeatureVector(
        rms=rms,
        kurtosis=m4 / (m2 * m2),
        peak_peak=float(x.max() - x.min()),
        crest_factor=float(np.max(np.abs(x))) / rms,
        skewness=m3 / m2**1.5,
    )


@dataclass(frozen=True)
class QuantParams:
    """Per-feature clamping range ``[lo, hi]``; arrays of length 5."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        if len(self.lo) != N_FEATURES or len(self.hi) != N_FEATURES:
            raise ValueError("QuantParams needs one range per feature")
        for name, a, b in zip(FEATURE_NAMES, self.lo, self.hi):
            if not b > a:
                raise ValueError(f"empty quantizer range for {name}: [{a}, {b}]")


def fit_quantizer(train: Sequence[FeatureVector], margin: float = 0.0) -> QuantParams:
    """Min/max range of each feature over the training vectors.

    ``margin`` widens both ends by that multiple of the observed span, leaving
    codes free above and below the training data. A degenerate range (single
    value) is widened by one ulp so that hi > lo.
    """
    if len(train) == 0:
        raise EmptyTrainingSet("cannot fit a quantizer on zero feature vectors")
    if margin < 0:
        raise ValueError(f"margin must be >= 0, got {margin}")
    X = np.array([fv.as_array() for fv in train])
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    if margin:
        span = hi - lo
        lo, hi = lo - margin * span, hi + margin * span
    hi = np.where(hi > lo, hi, np.nextafter(lo, np.inf))
    return QuantParams(tuple(float(v) for v in lo), tuple(float(v) for v in hi))


def quantize_array(X, q: QuantParams) -> np.ndarray:
    """Vectorised 6-bit quantization of an ``(n, 5)`` or ``(5,)`` array.

    Rounds half up: ``floor(63 * t + 0.5)``, then clamps to [0, 63].
    """
    X = np.asarray(X, dtype=np.float64)
    lo = np.asarray(q.lo)
    hi = np.asarray(q.hi)
    t = (X - lo) / (hi - lo)
    codes = np.floor(QUANT_MAX * t + 0.5)
    return np.clip(codes, 0, QUANT_MAX).astype(np.int64)


def quantize(fv: FeatureVector, q: QuantParams) -> tuple[int, ...]:
    return tuple(int(v) for v in quantize_array(fv.as_array(), q))
