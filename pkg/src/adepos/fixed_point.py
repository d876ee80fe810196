"""Integer inference mirroring a 16x16-bit MAC with 32-bit accumulation.

All scales are powers of two. A layer weight ``w`` is stored as
``round(w * 2**shift)`` in a signed 16-bit word; the hidden layer is shifted
right after the activation so that it fits a 16-bit word again before the
output layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .elm import BaseLearner, Mode
from .errors import AccumulatorOverflow, FixedPointRangeError, InvalidParams
from .features import QUANT_MAX

WORD_MAX = (1 << 15) - 1
ACC_MAX = (1 << 31) - 1


@dataclass(frozen=True)
class FixedPointProfile:
    weight_shift: int
    hidden_shift: int
    beta_shift: int
    acc_bits: int = 32

    @property
    def output_scale(self) -> float:
        return 2.0 ** (self.weight_shift - self.hidden_shift + self.beta_shift)

    def validate(self, bl: BaseLearner):
        if self.hidden_shift < 0:
            raise InvalidParams("hidden_shift must be >= 0")
        for name, arr, shift in (("W", bl.W, self.weight_shift), ("b", bl.b, self.weight_shift),
                                 ("beta", bl.beta, self.beta_shift)):
            q = np.rint(np.asarray(arr) * 2.0**shift)
            if q.size and np.max(np.abs(q)) > WORD_MAX:
                raise FixedPointRangeError(
                    f"{name} does not fit 16-bit signed words at scale 2**{shift}")


def _max_shift(max_abs: float, limit: int) -> int:
    if max_abs == 0:
        return 0
    return math.floor(math.log2(limit / max_abs))


def profile_for(bl: BaseLearner, input_max: int = QUANT_MAX) -> FixedPointProfile:
    """Highest-precision profile that cannot overflow for inputs in [0, input_max]."""
    if bl.mode is not Mode.BOUNDARY:
        raise InvalidParams("fixed-point inference is defined for boundary learners only")
    ws = _max_shift(max(np.max(np.abs(bl.W)), np.max(np.abs(bl.b))), WORD_MAX)
    Wq = np.rint(bl.W * 2.0**ws)
    bq = np.rint(bl.b * 2.0**ws)
    bound = int(np.max(np.abs(Wq).sum(axis=1) * input_max + np.abs(bq)))
    if bound > ACC_MAX:
        raise FixedPointRangeError("input layer cannot fit a 32-bit accumulator")
    hs = 0
    while (bound + ((1 << hs) >> 1)) >> hs > WORD_MAX:
        hs += 1
    h_max = min(WORD_MAX, (bound + ((1 << hs) >> 1)) >> hs)

    beta = np.abs(bl.beta)
    bs = _max_shift(float(np.max(beta)), WORD_MAX)
    # every partial sum of beta_q * h_q must stay inside the accumulator
    while bs > -64 and np.sum(np.rint(beta * 2.0**bs)) * h_max > ACC_MAX:
        bs -= 1
    return FixedPointProfile(weight_shift=ws, hidden_shift=hs, beta_shift=bs)


def _check_partial_sums(partial: np.ndarray, where: str):
    if partial.size and np.max(np.abs(partial)) > ACC_MAX:
        raise AccumulatorOverflow(f"32-bit accumulator overflow in {where}")


def quantized_infer_batch(bl: BaseLearner, QX, fp: FixedPointProfile) -> np.ndarray:
    """Integer boundary outputs for every row of ``QX``, rescaled to floats.

    Every partial sum of every dot product is checked against the 32-bit
    accumulator range; nothing wraps silently.
    """
    if bl.mode is not Mode.BOUNDARY:
        raise InvalidParams("fixed-point inference is defined for boundary learners only")
    fp.validate(bl)
    X = np.atleast_2d(np.asarray(QX))
    if not np.issubdtype(X.dtype, np.integer):
        raise InvalidParams("fixed-point inputs must be integers")
    X = X.astype(np.int64)
    if X.shape[1] != bl.d:
        raise InvalidParams(f"expected {bl.d} integer features, got {X.shape[1]}")
    Wq = np.rint(bl.W * 2.0**fp.weight_shift).astype(np.int64)
    bq = np.rint(bl.b * 2.0**fp.weight_shift).astype(np.int64)
    betaq = np.rint(bl.beta * 2.0**fp.beta_shift).astype(np.int64)
    half = (1 << fp.hidden_shift) >> 1

    # products[n, j, i] = Wq[j, i] * x[n, i]; accumulate over i, then add the bias
    partial = np.cumsum(X[:, None, :] * Wq[None, :, :], axis=2)
    _check_partial_sums(partial, "input layer")
    acc = partial[:, :, -1] + bq
    _check_partial_sums(acc, "input layer bias")
    hq = (np.abs(acc) + half) >> fp.hidden_shift
    if hq.size and np.max(hq) > WORD_MAX:
        raise AccumulatorOverflow("hidden activation does not fit a 16-bit word")
    partial = np.cumsum(hq * betaq[None, :], axis=1)
    _check_partial_sums(partial, "output layer")
    return partial[:, -1] / fp.output_scale


def quantized_infer(bl: BaseLearner, qx, fp: FixedPointProfile) -> float:
    """Boundary output of one integer input vector under profile ``fp``."""
    x = np.asarray(qx)
    if x.shape != (bl.d,):
        raise InvalidParams(f"expected {bl.d} integer features, got shape {x.shape}")
    return float(quantized_infer_batch(bl, x[None, :], fp)[0])
