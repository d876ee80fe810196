import numpy as np
import pytest

from adepos.calibration import loo_threshold
from adepos.ensemble import train_ensemble
from adepos.errors import InvalidSpec
from adepos.features import fit_quantizer, quantize_array
from adepos.synthetic import (
    HEALTHY_MEAN,
    IMS_ROSTER,
    Drift,
    Segment,
    SyntheticSpec,
    generate_synthetic,
    synthetic_fleet,
)

STATIONARY = SyntheticSpec((Segment(600),))


def quantized(table, n_train):
    q = fit_quantizer(table.features[:n_train], margin=1.0)
    return quantize_array(table.as_array(), q).astype(float)


class TestGenerate:
    def test_deterministic(self):
        a = generate_synthetic(STATIONARY, seed=4)
        b = generate_synthetic(STATIONARY, seed=4)
        assert a == b
        assert generate_synthetic(STATIONARY, seed=5) != a

    def test_labels_follow_segments_and_drift(self):
        spec = SyntheticSpec((Segment(10), Segment(5, faulty=True)), Drift(start=8))
        labels = generate_synthetic(spec).labels
        assert labels == ["healthy"] * 8 + ["faulty"] * 7

    @pytest.mark.parametrize("spec", [
        SyntheticSpec(()),
        SyntheticSpec((Segment(0),)),
        SyntheticSpec((Segment(5, mean=(1.0,)),)),
        SyntheticSpec((Segment(5, std=(-1.0,) * 5),)),
        SyntheticSpec((Segment(5),), Drift(start=1, kind="cubic")),
        SyntheticSpec((Segment(5),), Drift(start=1, horizon=0)),
    ])
    def test_invalid_specs(self, spec):
        with pytest.raises(InvalidSpec):
            generate_synthetic(spec)

    @pytest.mark.parametrize("seed", range(5))
    def test_stationary_stream_stays_below_threshold(self, seed):
        Q = quantized(generate_synthetic(STATIONARY, seed), 60)
        ens = train_ensemble(Q[:60], 5, 20, 9, base_seed=seed)
        other = quantized(generate_synthetic(STATIONARY, seed + 100), 60)
        lam = loo_threshold(ens.residual_matrix(other).ravel())
        assert np.mean(ens.learners[0].residual(Q[60:]) <= lam) >= 0.99

    @pytest.mark.parametrize("seed", range(5))
    def test_step_change_exceeds_pre_step_residuals(self, seed):
        shifted = tuple(m * 1.5 if i < 3 else m for i, m in enumerate(HEALTHY_MEAN))
        spec = SyntheticSpec((Segment(300), Segment(100, mean=shifted, faulty=True)))
        Q = quantized(generate_synthetic(spec, seed), 30)
        bl = train_ensemble(Q[:30], 5, 20, 1, base_seed=seed).learners[0]
        r = bl.residual(Q)
        assert r[300:].min() > r[:300].max()


class TestFleet:
    def test_roster(self):
        fleet = synthetic_fleet(100)
        assert [(b.bearing_id, b.faulty) for b in fleet] == list(IMS_ROSTER)
        assert all(len(b.table.features) == 100 for b in fleet)
        faulty = next(b for b in fleet if b.faulty)
        assert faulty.table.labels[-1] == "faulty" and faulty.table.labels[0] == "healthy"

    def test_invalid(self):
        with pytest.raises(InvalidSpec):
            synthetic_fleet(5)
        with pytest.raises(InvalidSpec):
            synthetic_fleet(100, fault_fraction=0.95)
