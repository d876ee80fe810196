import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adepos.ensemble import LifetimeReport, Verdict
from adepos.neuron_gen import required_physical_neurons
from adepos.errors import (
    InvalidCircuitParams,
    InvalidDimension,
    InvalidEfficiency,
    InvalidParams,
    NonPositiveDenominator,
)
from adepos.power import (
    SWEEP_V_OUT,
    AotCircuit,
    AotParams,
    BuckParams,
    EnergyParams,
    PerOpCost,
    aot_constants_from_circuit,
    aot_on_time,
    approx_physical_neurons,
    average_power,
    buck_ripple,
    energy_savings,
    op_count_ng,
    op_count_orig,
    ripple_spread,
    ripple_sweep,
    run_op_count,
    system_energy,
)

# Circuit box over which the adaptive on-time flattens the ripple. Beyond
# |V_th| ~ 0.59 with a strong P1 device the adaptive on-time overshoots.
BOX_C = (10e-12, 1e-9)
BOX_R = (1e3, 10e6)
BOX_K = (1e-7, 1e-3)
BOX_VTH = (0.3, 0.55)


def report(executed, n_max=9, L=20):
    return LifetimeReport([Verdict.HEALTHY] * len(executed), list(executed), L, n_max)


def log_uniform(lo, hi):
    return st.floats(math.log(lo), math.log(hi)).map(math.exp)


class TestOpCounts:
    @pytest.mark.parametrize("d,L,N,want", [(5, 20, 9, 2151), (1, 1, 1, 3), (5, 20, 1, 239)])
    def test_original(self, d, L, N, want):
        assert op_count_orig(d, L, N).total == want

    def test_ng(self):
        assert op_count_ng(5, 20, 9).total == 731
        assert op_count_ng(5, 20, 1).total == 129

    def test_orig_to_ng_ratio(self):
        assert op_count_orig(5, 20, 9).total / op_count_ng(5, 20, 9).total == pytest.approx(2.94, abs=0.005)

    @given(st.integers(1, 16), st.integers(1, 200), st.integers(1, 25))
    def test_ng_saving_is_input_macs_minus_subtractions(self, d, L, N):
        saved = op_count_orig(d, L, N).total - op_count_ng(d, L, N).total
        assert saved == 2 * d * (N * L - required_physical_neurons(L, N)) - N * L

    @given(st.integers(2, 16), st.integers(4, 200), st.integers(2, 25))
    def test_ng_cheaper_when_pool_is_small(self, d, L, N):
        if 2 * N <= L:
            assert op_count_ng(d, L, N).total < op_count_orig(d, L, N).total

    def test_ng_can_cost_more_for_scalar_inputs(self):
        # d=1: a 5-neuron pool saves 6 MACs but adds 8 subtractions
        assert op_count_ng(1, 4, 2).total > op_count_orig(1, 4, 2).total

    def test_split_adds_up(self):
        for ops in (op_count_orig(5, 20, 9), op_count_ng(5, 20, 9)):
            assert ops.multiplies + ops.adds == ops.total
            assert ops.input_layer_ops + ops.output_layer_ops == ops.total

    def test_invalid(self):
        with pytest.raises(InvalidDimension):
            op_count_orig(0, 20, 9)

    def test_lifetime_totals(self):
        S = 37
        assert run_op_count(report([9] * S), 5).total == S * 2151
        assert run_op_count(report([1] * S), 5).total == S * 239

    def test_ng_lifetime_shares_pool(self):
        # the physical layer is sized for the whole pool and charged once per sample
        rep = report([1, 3, 9])
        got = run_op_count(rep, 5, ng=True).total
        want = sum(op_count_ng(5, 20, n, l_phy=20).total for n in (1, 3, 9))
        assert got == want

    def test_energy_savings(self):
        fixed, single = report([9] * 10), report([1] * 10)
        assert energy_savings(fixed, fixed) == 1.0
        assert energy_savings(fixed, single) == pytest.approx(2151 / 239)
        costly_mac = PerOpCost(mac=3.0, add_sub=1.0)
        assert energy_savings(fixed, single, costly_mac) > 1.0

    def test_approximate_pool_size(self):
        assert approx_physical_neurons(20, 9) == pytest.approx(math.sqrt(360))


class TestSystemEnergy:
    def test_duty_cycle(self):
        p = EnergyParams.from_powers(12e-6, 600.0, 744e-6, 114e-6)
        assert average_power(p) == pytest.approx(12e-6, rel=0.01)

    def test_sleep_only_and_identity(self):
        p = EnergyParams(1.0, 2.0, 3.0, 1.0, 4.0, 5.0, 0.0, 1.0)
        assert system_energy(p) == 6.0
        p = EnergyParams(1.0, 2.0, 3.0, 1.0, 4.0, 5.0, 6.0, 1.0)
        assert system_energy(p) == 6.0 + 120.0

    def test_efficiency_divides(self):
        p = EnergyParams(1.0, 1.0, 1.0, 0.5, 1.0, 1.0, 1.0, 0.25)
        assert system_energy(p) == pytest.approx(2.0 + 4.0)

    @given(st.floats(0, 1e3), st.floats(0, 1e3), st.floats(0, 1))
    def test_linear_in_times(self, t1, t2, ta):
        def e(ts, tact):
            return system_energy(EnergyParams(1.0, 12e-6, ts, 0.8, 0.9, 800e-6, tact, 0.7))
        assert e(t1 + t2, ta) == pytest.approx(e(t1, ta) + e(t2, ta) - e(0, ta), rel=1e-9, abs=1e-15)
        assert e(t1, 2 * ta) == pytest.approx(2 * e(t1, ta) - e(t1, 0), rel=1e-9, abs=1e-15)

    def test_invalid(self):
        with pytest.raises(InvalidEfficiency):
            EnergyParams(1, 1, 1, 0.0, 1, 1, 1, 1)
        with pytest.raises(InvalidEfficiency):
            EnergyParams(1, 1, 1, 1, 1, 1, 1, 1.5)
        with pytest.raises(InvalidParams):
            EnergyParams(1, 1, -1, 1, 1, 1, 1, 1)


class TestBuckRipple:
    def test_hand_case(self):
        b = BuckParams(0.0, 10e-6, 2.2e-6, 3.3, 0.75, 300e-9)
        assert buck_ripple(b) == pytest.approx(0.02295, rel=5e-6)
        # independent evaluation of the two factors
        peak = (3.3 - 0.75) * 300e-9 / 2.2e-6
        assert buck_ripple(b) == pytest.approx(300e-9 * 3.3 / (2 * 10e-6 * 0.75) * peak, rel=1e-15)

    def test_esr_term(self):
        a = buck_ripple(BuckParams(0.0, 10e-6, 2.2e-6, 3.3, 0.75, 300e-9))
        b = buck_ripple(BuckParams(0.1, 10e-6, 2.2e-6, 3.3, 0.75, 300e-9))
        assert b - a == pytest.approx(0.1 * 2.55 * 300e-9 / 2.2e-6, rel=1e-12)
        assert b - a == pytest.approx(0.0348, abs=5e-5)

    def test_vanishes_as_vout_reaches_vbatt(self):
        vals = [buck_ripple(BuckParams(0.1, 10e-6, 2.2e-6, 3.3, 3.3 - eps, 300e-9))
                for eps in (1e-1, 1e-3, 1e-6)]
        assert vals[0] > vals[1] > vals[2] and vals[2] < 1e-6

    @given(st.floats(1e-7, 1e-4), st.floats(1e-7, 1e-4), st.floats(1e-8, 2e-6), st.floats(1.01, 2.0))
    def test_monotone(self, c, l, t, f):
        base = BuckParams(0.05, c, l, 3.3, 1.0, t)
        r = buck_ripple(base)
        assert buck_ripple(BuckParams(0.05, c * f, l, 3.3, 1.0, t)) < r
        assert buck_ripple(BuckParams(0.05, c, l * f, 3.3, 1.0, t)) < r
        assert buck_ripple(BuckParams(0.05, c, l, 3.3, 1.0, t * f)) > r

    def test_invalid(self):
        with pytest.raises(InvalidParams):
            BuckParams(0.0, 10e-6, 2.2e-6, 1.0, 1.5, 300e-9)
        with pytest.raises(InvalidParams):
            BuckParams(0.0, 0.0, 2.2e-6, 3.3, 1.0, 300e-9)


class TestAdaptiveOnTime:
    def test_hand_case(self):
        assert aot_on_time(AotParams(2, 1, 1, 0), 3, 1) == 3.0

    @given(st.floats(0.5, 5), st.floats(0.1, 3))
    def test_degenerate_constants(self, vb, vo):
        assert aot_on_time(AotParams(4.0, 2.0, 0.0, 0.0), vb, vo) == pytest.approx(2.0 / vb * vb)

    def test_non_positive_denominator(self):
        with pytest.raises(NonPositiveDenominator):
            aot_on_time(AotParams(1, 1, 4, 0), 1.0, 1.0)

    def test_circuit_constants(self):
        a = aot_constants_from_circuit(150e-12, 1e5, 0.0, 0.45)
        assert a.k1 == pytest.approx(1e-10)
        assert a.k3 == 0.0 and a.k4 == 0.0
        assert a.k2 == pytest.approx(2 / 3e5)
        with pytest.raises(InvalidCircuitParams):
            aot_constants_from_circuit(0.0, 1e5, 1e-5, 0.45)
        with pytest.raises(InvalidCircuitParams):
            aot_constants_from_circuit(1e-11, 1e5, 1e-5, 0.45, V_sg1=2.7, V_sg2=1.1)

    def test_linearization_error(self):
        c = AotCircuit(10e-12, 1e5, 1e-5, 0.45)
        assert c.linearization_error(3.3, 1.1) <= 0.09
        assert c.linearization_error(3.3, 2.7) == pytest.approx(0.0, abs=1e-12)
        # the secant lies above the parabola by k (V - a)(b - V) inside the range
        for v in np.linspace(1.1, 2.7, 9):
            gap = c.charging_current(3.3, v, linear=True) - c.charging_current(3.3, v)
            assert gap == pytest.approx(c.k * (v - 1.1) * (2.7 - v), abs=1e-18)

    def test_sweep_layout(self):
        rows = ripple_sweep(aot_constants_from_circuit(10e-12, 1e5, 1e-5, 0.45))
        assert len(rows) == 2 * len(SWEEP_V_OUT) == 32
        assert SWEEP_V_OUT[0] == 0.5 and SWEEP_V_OUT[-1] == 1.25
        assert len({r["T_on_cot"] for r in rows}) == 1

    @settings(max_examples=400, deadline=None)
    @given(log_uniform(*BOX_C), log_uniform(*BOX_R), log_uniform(*BOX_K), st.floats(*BOX_VTH))
    def test_adaptive_spread_smaller(self, C, R, k, vth):
        rows = ripple_sweep(aot_constants_from_circuit(C, R, k, vth))
        assert ripple_spread(rows, "ripple_aot") < ripple_spread(rows, "ripple_cot")
