"""Operation counts, duty-cycled system energy and DCM buck converter formulas."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import (
    InvalidCircuitParams,
    InvalidDimension,
    InvalidEfficiency,
    InvalidParams,
    NonPositiveDenominator,
)
from .neuron_gen import required_physical_neurons


@dataclass(frozen=True)
class OpCount:
    """Multiply and add operations of one boundary-mode inference pass."""

    input_layer_ops: int
    output_layer_ops: int
    multiplies: int
    adds: int

    @property
    def total(self) -> int:
        return self.input_layer_ops + self.output_layer_ops

    def __add__(self, other: "OpCount") -> "OpCount":
        return OpCount(self.input_layer_ops + other.input_layer_ops,
                       self.output_layer_ops + other.output_layer_ops,
                       self.multiplies + other.multiplies, self.adds + other.adds)

    def scaled(self, k: int) -> "OpCount":
        return OpCount(k * self.input_layer_ops, k * self.output_layer_ops,
                       k * self.multiplies, k * self.adds)


ZERO_OPS = OpCount(0, 0, 0, 0)


def _check_dims(d, L, N):
    if d < 1 or L < 1 or N < 1:
        raise InvalidDimension(f"need d, L, N >= 1, got d={d}, L={L}, N={N}")


def op_count_orig(d: int, L: int, N: int) -> OpCount:
    """``N`` independent learners: ``N * (2dL + 2L - 1)`` operations."""
    _check_dims(d, L, N)
    out = N * L + (L - 1) * N
    return OpCount(2 * N * d * L, out, multiplies=N * (d * L + L), adds=N * (d * L + L - 1))


def op_count_ng(d: int, L: int, N: int, l_phy: int | None = None) -> OpCount:
    """Shared physical layer plus one subtraction per virtual neuron.

    ``l_phy`` defaults to the pool size needed for ``N`` learners; pass the
    size of an existing pool when ``N`` is only the active subset.
    """
    _check_dims(d, L, N)
    if l_phy is None:
        l_phy = required_physical_neurons(L, N)
    inp = 2 * l_phy * d + N * L
    out = N * L + (L - 1) * N
    return OpCount(inp, out, multiplies=l_phy * d + N * L,
                   adds=l_phy * d + N * L + N * (L - 1))


def run_op_count(report, d: int, ng: bool = False) -> OpCount:
    """Operations spent over a lifetime; each sample charges its executed learners.

    With ``ng`` the physical layer of the full pool is charged once per sample
    that executes at least one learner.
    """
    l_phy = required_physical_neurons(report.L, report.n_max)
    counts: dict[int, int] = {}
    for n in report.executed:
        counts[n] = counts.get(n, 0) + 1
    total = ZERO_OPS
    for n, k in sorted(counts.items()):
        if n == 0:
            continue
        per = op_count_ng(d, report.L, n, l_phy) if ng else op_count_orig(d, report.L, n)
        total = total + per.scaled(k)
    return total


@dataclass(frozen=True)
class PerOpCost:
    mac: float = 1.0
    add_sub: float = 1.0

    def __post_init__(self):
        if self.mac < 0 or self.add_sub < 0:
            raise InvalidParams("per-operation energies must be >= 0")

    def energy(self, ops: OpCount) -> float:
        return ops.multiplies * self.mac + ops.adds * self.add_sub


def energy_savings(report_a, report_b, costs: PerOpCost = PerOpCost(), d: int = 5,
                   ng_a: bool = False, ng_b: bool = False) -> float:
    """Modelled energy of ``report_a`` divided by that of ``report_b``."""
    ea = costs.energy(run_op_count(report_a, d, ng_a))
    eb = costs.energy(run_op_count(report_b, d, ng_b))
    if ea == eb:
        return 1.0
    return ea / eb


@dataclass(frozen=True)
class EnergyParams:
    V_out_sta: float
    I_core_sta: float
    T_sleep: float
    eta_sta: float
    V_out_dyn: float
    I_core_dyn: float
    T_active: float
    eta_dyn: float

    def __post_init__(self):
        for name in ("eta_sta", "eta_dyn"):
            eta = getattr(self, name)
            if not 0 < eta <= 1:
                raise InvalidEfficiency(f"{name}={eta} must lie in (0, 1]")
        for name in ("V_out_sta", "I_core_sta", "T_sleep", "V_out_dyn", "I_core_dyn", "T_active"):
            if getattr(self, name) < 0:
                raise InvalidParams(f"{name} must be >= 0")

    @classmethod
    def from_powers(cls, p_sleep, T_sleep, p_active, T_active, V_sleep=1.0, V_active=1.0,
                    eta_sta=1.0, eta_dyn=1.0) -> "EnergyParams":
        """Build parameters from system-level powers (efficiency already folded in)."""
        return cls(V_sleep, p_sleep * eta_sta / V_sleep, T_sleep, eta_sta,
                   V_active, p_active * eta_dyn / V_active, T_active, eta_dyn)


def system_energy(p: EnergyParams) -> float:
    """Joules per duty cycle: one sleep period plus one active period."""
    return (p.V_out_sta * p.I_core_sta * p.T_sleep / p.eta_sta
            + p.V_out_dyn * p.I_core_dyn * p.T_active / p.eta_dyn)


def average_power(p: EnergyParams) -> float:
    period = p.T_sleep + p.T_active
    if period <= 0:
        raise InvalidParams("duty cycle period must be positive")
    return system_energy(p) / period


@dataclass(frozen=True)
class BuckParams:
    R_esr: float
    C_out: float
    L_ind: float
    V_batt: float
    V_out: float
    T_on: float

    def __post_init__(self):
        for name in ("C_out", "L_ind", "V_batt", "V_out", "T_on"):
            if not getattr(self, name) > 0:
                raise InvalidParams(f"{name} must be > 0")
        if self.R_esr < 0:
            raise InvalidParams("R_esr must be >= 0")
        if not self.V_out < self.V_batt:
            raise InvalidParams("V_out must be below V_batt")


def buck_ripple(b: BuckParams) -> float:
    """Output voltage ripple of a DCM buck converter for one on-time pulse."""
    peak = (b.V_batt - b.V_out) * b.T_on / b.L_ind
    return (b.R_esr + b.T_on * b.V_batt / (2 * b.C_out * b.V_out)) * peak


@dataclass(frozen=True)
class AotParams:
    k1: float
    k2: float
    k3: float
    k4: float


def aot_on_time(a: AotParams, V_batt: float, V_out: float) -> float:
    den = (a.k2 * V_batt - a.k3 * V_out) + a.k4
    if not den > 0:
        raise NonPositiveDenominator(f"on-time denominator {den} <= 0 at "
                                     f"V_batt={V_batt}, V_out={V_out}")
    return a.k1 * V_batt / den


def pmos_current(k: float, V_th: float, V_sg: float) -> float:
    """Square-law drain current ``k * (V_sg - |V_th|)**2``."""
    return k * (V_sg - abs(V_th)) ** 2


@dataclass(frozen=True)
class AotCircuit:
    """Timing capacitor, resistor and P1 device of the adaptive on-time block."""

    C: float
    R: float
    k: float
    V_th: float
    V_sg1: float = 1.1
    V_sg2: float = 2.7

    def linear_current(self, V_sg: float) -> float:
        a = aot_constants_from_circuit(self.C, self.R, self.k, self.V_th, self.V_sg1, self.V_sg2)
        return a.k3 * V_sg + a.k4

    def charging_current(self, V_batt: float, V_sg: float, linear: bool = False) -> float:
        i_r = 2 * V_batt / (3 * self.R)
        i_p = self.linear_current(V_sg) if linear else pmos_current(self.k, self.V_th, V_sg)
        return i_r + i_p

    def linearization_error(self, V_batt: float, V_sg: float) -> float:
        """Relative error of the total charging current from the linear P1 model."""
        exact = self.charging_current(V_batt, V_sg)
        return abs(self.charging_current(V_batt, V_sg, linear=True) - exact) / exact


def aot_constants_from_circuit(C, R, k, V_th, V_sg1=1.1, V_sg2=2.7) -> AotParams:
    """Constants of the on-time formula from the secant fit of P1's current.

    The square-law current is replaced by the line through its values at
    ``V_sg1`` and ``V_sg2``; the capacitor charges to ``2 V_batt / 3`` while
    the resistor carries ``2 V_batt / (3 R)`` on average and ``V_sg`` of P1 is
    ``V_batt - V_out``.
    """
    if not (C > 0 and R > 0):
        raise InvalidCircuitParams("C and R must be positive")
    if k < 0:
        raise InvalidCircuitParams("k must be >= 0")
    if not V_sg1 < V_sg2:
        raise InvalidCircuitParams("need V_sg1 < V_sg2")
    slope = k * (V_sg1 + V_sg2 - 2 * abs(V_th))
    offset = pmos_current(k, V_th, V_sg1) - slope * V_sg1
    return AotParams(k1=2 * C / 3, k2=slope + 2 / (3 * R), k3=slope, k4=offset)


SWEEP_V_BATT = (2.7, 3.3)
SWEEP_V_OUT = tuple(round(0.5 + 0.05 * i, 2) for i in range(16))


def ripple_sweep(aot: AotParams, R_esr=0.1, C_out=10e-6, L_ind=2.2e-6, V_batt_grid=SWEEP_V_BATT,
                 V_out_grid=SWEEP_V_OUT, T_on_cot: float | None = None) -> list[dict]:
    """Ripple under constant and adaptive on-time for every grid point.

    The constant on-time defaults to the adaptive on-time at the grid centre.
    """
    if T_on_cot is None:
        vb_c = 0.5 * (min(V_batt_grid) + max(V_batt_grid))
        vo_c = 0.5 * (min(V_out_grid) + max(V_out_grid))
        T_on_cot = aot_on_time(aot, vb_c, vo_c)
    rows = []
    for vb in V_batt_grid:
        for vo in V_out_grid:
            t_aot = aot_on_time(aot, vb, vo)
            rows.append({
                "V_batt": vb,
                "V_out": vo,
                "T_on_cot": T_on_cot,
                "T_on_aot": t_aot,
                "ripple_cot": buck_ripple(BuckParams(R_esr, C_out, L_ind, vb, vo, T_on_cot)),
                "ripple_aot": buck_ripple(BuckParams(R_esr, C_out, L_ind, vb, vo, t_aot)),
            })
    return rows


def ripple_spread(rows, key) -> float:
    vals = [r[key] for r in rows]
    return max(vals) - min(vals)


def approx_physical_neurons(L: int, n_max: int) -> float:
    return math.sqrt(2 * n_max * L)
