import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from adepos.errors import DegenerateWindow, EmptyTrainingSet
from adepos.features import (
    FeatureVector,
    QuantParams,
    extract_features,
    fit_quantizer,
    quantize,
    quantize_array,
)


def two_pass_oracle(x):
    """Plain-Python moments, accumulated with math.fsum."""
    x = [float(v) for v in x]
    n = len(x)
    mean = math.fsum(x) / n
    dev = [v - mean for v in x]
    m2 = math.fsum(d * d for d in dev) / n
    m3 = math.fsum(d**3 for d in dev) / n
    m4 = math.fsum(d**4 for d in dev) / n
    rms = math.sqrt(math.fsum(v * v for v in x) / n)
    return {
        "rms": rms,
        "kurtosis": m4 / m2**2,
        "peak_peak": max(x) - min(x),
        "crest_factor": max(abs(v) for v in x) / rms,
        "skewness": m3 / m2**1.5,
    }


class TestExtractFeatures:
    def test_alternating_unit_window(self):
        fv = extract_features([1, -1, 1, -1])
        assert fv.rms == pytest.approx(1.0)
        assert fv.kurtosis == pytest.approx(1.0)
        assert fv.peak_peak == 2.0
        assert fv.crest_factor == pytest.approx(1.0)
        assert fv.skewness == pytest.approx(0.0, abs=1e-15)

    def test_zero_window_is_degenerate(self):
        with pytest.raises(DegenerateWindow):
            extract_features([0, 0, 0, 0])

    def test_constant_and_short_windows(self):
        with pytest.raises(DegenerateWindow):
            extract_features([2.0, 2.0, 2.0])
        with pytest.raises(DegenerateWindow):
            extract_features([1.0])
        with pytest.raises(DegenerateWindow):
            extract_features([1.0, np.nan])

    def test_sparse_window(self):
        # m2 = 4.5 and m4 = 40.5, so the raw kurtosis is exactly 2
        fv = extract_features([0, 3, 0, -3])
        assert fv.rms == pytest.approx(3 / math.sqrt(2), rel=1e-12)
        assert fv.peak_peak == 6.0
        assert fv.crest_factor == pytest.approx(math.sqrt(2), rel=1e-12)
        assert fv.kurtosis == pytest.approx(2.0, rel=1e-12)
        assert fv.skewness == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("n", [2, 3, 17, 256, 1024])
    def test_matches_two_pass_oracle(self, n):
        rng = np.random.default_rng(n)
        for _ in range(20):
            x = rng.standard_normal(n) * rng.uniform(0.1, 10) + rng.uniform(-2, 2)
            fv = extract_features(x)
            ref = two_pass_oracle(x)
            for name, want in ref.items():
                got = getattr(fv, name)
                assert got == pytest.approx(want, rel=1e-12, abs=1e-12), name

    @settings(max_examples=200, deadline=None)
    @given(arrays(np.float64, st.integers(2, 64),
                  elements=st.floats(-1e3, 1e3, allow_nan=False, allow_subnormal=False)))
    def test_sign_flip_invariance(self, x):
        if np.ptp(x) < 1e-6 * max(1.0, np.max(np.abs(x))):
            return  # too close to constant for a meaningful relative check
        a, b = extract_features(x), extract_features(-x)
        assert b.rms == pytest.approx(a.rms, rel=1e-12)
        assert b.peak_peak == pytest.approx(a.peak_peak, rel=1e-12)
        assert b.kurtosis == pytest.approx(a.kurtosis, rel=1e-9)
        assert b.skewness == pytest.approx(-a.skewness, rel=1e-9, abs=1e-9)

    def test_round_trip_through_array(self):
        fv = FeatureVector(1.0, 2.0, 3.0, 4.0, 5.0)
        assert FeatureVector.from_array(fv.as_array()) == fv
        with pytest.raises(ValueError):
            FeatureVector.from_array([1, 2, 3])


def _fv(rms, **kw):
    base = dict(kurtosis=3.0, peak_peak=1.0, crest_factor=4.0, skewness=0.0)
    base.update(kw)
    return FeatureVector(rms=rms, **base)


class TestQuantizer:
    def test_min_max_range(self):
        q = fit_quantizer([_fv(1.0), _fv(2.0), _fv(3.0)])
        assert (q.lo[0], q.hi[0]) == (1.0, 3.0)

    def test_single_vector_is_widened(self):
        q = fit_quantizer([_fv(2.0)])
        assert all(h > l for l, h in zip(q.lo, q.hi))
        assert fit_quantizer([_fv(2.0), _fv(2.0)]) == q

    def test_empty_training_set(self):
        with pytest.raises(EmptyTrainingSet):
            fit_quantizer([])

    def test_margin_widens_both_ends(self):
        q = fit_quantizer([_fv(1.0), _fv(3.0)], margin=1.0)
        assert (q.lo[0], q.hi[0]) == (-1.0, 5.0)
        with pytest.raises(ValueError):
            fit_quantizer([_fv(1.0)], margin=-0.5)

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            QuantParams((0.0,) * 5, (0.0,) * 5)
        with pytest.raises(ValueError):
            QuantParams((0.0,) * 4, (1.0,) * 4)

    def test_endpoints_half_up_and_clamp(self):
        q = QuantParams((0.0,) * 5, (10.0,) * 5)
        assert quantize(FeatureVector(0, 0, 0, 0, 0), q) == (0,) * 5
        assert quantize(FeatureVector(10, 10, 10, 10, 10), q) == (63,) * 5
        # 63 * 0.5 = 31.5 rounds up
        assert quantize(FeatureVector(5, 5, 5, 5, 5), q) == (32,) * 5
        assert quantize(FeatureVector(110, -5, 10, 0, 5), q) == (63, 0, 63, 0, 32)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(-50, 50, allow_nan=False), min_size=2, max_size=50))
    def test_monotone(self, values):
        q = QuantParams((-20.0,) * 5, (20.0,) * 5)
        v = np.sort(np.array(values))
        X = np.repeat(v[:, None], 5, axis=1)
        codes = quantize_array(X, q)
        assert np.all(np.diff(codes, axis=0) >= 0)
        assert codes.min() >= 0 and codes.max() <= 63
