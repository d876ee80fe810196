"""Threshold selection and evaluation statistics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyGroup, InsufficientData, InvalidParams, ZeroTrainingNoise


def loo_threshold(healthy_errors, c: float = 1.0) -> float:
    """``max(eps) + 0.5 * c * std(eps)`` with the n-1 standard deviation."""
    if c < 0:
        raise InvalidParams(f"threshold multiplier must be >= 0, got {c}")
    e = np.asarray(healthy_errors, dtype=np.float64).ravel()
    if e.size < 2:
        raise InsufficientData(f"need at least 2 error values, got {e.size}")
    return float(e.max() + 0.5 * c * e.std(ddof=1))


def gamma(test_errors, train_errors) -> float:
    """Largest test error relative to the mean training error (absolute values)."""
    test = np.abs(np.asarray(test_errors, dtype=np.float64).ravel())
    train = np.abs(np.asarray(train_errors, dtype=np.float64).ravel())
    if test.size == 0 or train.size == 0:
        raise InsufficientData("gamma needs non-empty test and train errors")
    noise = train.mean()
    if noise <= 0:
        raise ZeroTrainingNoise("mean training error is zero")
    return float(test.max() / noise)


def robustness_margin(gamma_healthy: Iterable[float], gamma_faulty: Iterable[float]) -> float:
    """Gap between the smallest faulty and the largest healthy gamma.

    Positive exactly when one threshold on gamma separates the two groups.
    """
    h = list(gamma_healthy)
    f = list(gamma_faulty)
    if not h or not f:
        raise EmptyGroup("both healthy and faulty groups must be non-empty")
    return float(min(f) - max(h))


@dataclass(frozen=True)
class DetectionMetrics:
    accuracy: float
    false_positive_rate: float
    n_healthy: int
    n_faulty: int


def detection_metrics(outcomes: Sequence[tuple[bool, bool]]) -> DetectionMetrics:
    """Score ``(is_faulty, alarm_raised)`` pairs, one per bearing."""
    if not outcomes:
        raise InsufficientData("no outcomes to score")
    correct = sum(1 for faulty, alarm in outcomes if faulty == alarm)
    healthy_alarms = [alarm for faulty, alarm in outcomes if not faulty]
    fp = sum(healthy_alarms) / len(healthy_alarms) if healthy_alarms else 0.0
    return DetectionMetrics(
        accuracy=correct / len(outcomes),
        false_positive_rate=float(fp),
        n_healthy=len(healthy_alarms),
        n_faulty=len(outcomes) - len(healthy_alarms),
    )
