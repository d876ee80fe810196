"""Majority-vote ensemble of base learners and the ADEPOS controller.

ADEPOS starts each sample with a small odd panel of learners. When the
panel votes anomalous it adds two more learners and re-votes on the same
sample, reusing verdicts already computed; only a full panel that still
votes anomalous raises a maintenance alarm. After a healthy vote the panel
for the next sample shrinks by two.
"""

from __future__ import annotations

import csv
import enum
import io
import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .elm import BaseLearner, Mode, ThetaUpdate, init_base_learner
from .errors import EmptyTrainingSet, EvenOrEmptyPanel, FormatError, InvalidParams, NonFiniteResidual
from .fixed_point import FixedPointProfile, profile_for, quantized_infer, quantized_infer_batch
from .neuron_gen import PairMap, PhysicalPool, build_pool, ng_learner, virtual_from_preacts

logger = logging.getLogger(__name__)

REPORT_HEADER = "# adepos lifetime report v1"


class Verdict(str, enum.Enum):
    HEALTHY = "healthy"
    ANOMALOUS = "anomalous"
    MAINTENANCE_ALARM = "maintenance_alarm"


def majority_vote(verdicts: Sequence[Verdict]) -> Verdict:
    n = len(verdicts)
    if n == 0 or n % 2 == 0:
        raise EvenOrEmptyPanel(f"majority vote needs an odd, non-empty panel, got {n}")
    n_anom = sum(1 for v in verdicts if v is Verdict.ANOMALOUS)
    return Verdict.ANOMALOUS if 2 * n_anom > n else Verdict.HEALTHY


def learner_verdict(bl: BaseLearner, x, lam: float) -> Verdict:
    """Anomalous iff the residual strictly exceeds ``lam``."""
    eps = bl.residual(x)
    if not np.isfinite(eps):
        raise NonFiniteResidual(f"residual is {eps}")
    return Verdict.ANOMALOUS if eps > lam else Verdict.HEALTHY


@dataclass
class Ensemble:
    learners: list[BaseLearner]
    lam: float = float("inf")
    pool: PhysicalPool | None = None
    pair_map: PairMap | None = None
    fixed_point: bool = False
    # counts physical-layer evaluations when a pool is attached
    pool_evaluations: int = field(default=0, compare=False)
    _profiles: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        n = len(self.learners)
        if n == 0 or n % 2 == 0:
            raise EvenOrEmptyPanel(f"ensemble size must be odd and >= 1, got {n}")
        first = self.learners[0]
        for bl in self.learners[1:]:
            if (bl.d, bl.L, bl.mode) != (first.d, first.L, first.mode):
                raise InvalidParams("all learners must share d, L and mode")
        if (self.pool is None) != (self.pair_map is None):
            raise InvalidParams("pool and pair_map must be given together")
        if self.fixed_point and first.mode is not Mode.BOUNDARY:
            raise InvalidParams("fixed-point evaluation needs boundary learners")

    def profile(self, i: int) -> FixedPointProfile:
        if i not in self._profiles:
            self._profiles[i] = profile_for(self.learners[i])
        return self._profiles[i]

    @property
    def n_max(self) -> int:
        return len(self.learners)

    @property
    def L(self) -> int:
        return self.learners[0].L

    @property
    def d(self) -> int:
        return self.learners[0].d

    def sample_context(self, x) -> "_SampleContext":
        return _SampleContext(self, np.asarray(x, dtype=np.float64))

    def residual_matrix(self, X) -> np.ndarray:
        """Residuals of every learner on every row, shape ``(n_samples, n_max)``."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self.fixed_point:
            QX = np.rint(X).astype(np.int64)
            return np.column_stack([np.abs(bl.R - quantized_infer_batch(bl, QX, self.profile(i)))
                                    for i, bl in enumerate(self.learners)])
        return np.column_stack([bl.residual(X) for bl in self.learners])


class _SampleContext:
    """Per-sample evaluation with a verdict cache and shared physical layer."""

    def __init__(self, ens: Ensemble, x: np.ndarray):
        self.ens = ens
        self.x = x
        self.cache: dict[int, Verdict] = {}
        self._preacts = None

    def verdict(self, i: int) -> Verdict:
        if i in self.cache:
            return self.cache[i]
        ens = self.ens
        bl = ens.learners[i]
        if ens.fixed_point:
            eps = abs(bl.R - quantized_infer(bl, np.rint(self.x).astype(np.int64), ens.profile(i)))
        elif ens.pool is not None:
            if self._preacts is None:
                self._preacts = ens.pool.preactivations(self.x)
                ens.pool_evaluations += 1
            h = virtual_from_preacts(self._preacts, ens.pair_map.block(i))
            eps = bl.residual_from_hidden(self.x, h)
        else:
            eps = bl.residual(self.x)
        if not np.isfinite(eps):
            raise NonFiniteResidual(f"learner {i} residual is {eps}")
        v = Verdict.ANOMALOUS if eps > ens.lam else Verdict.HEALTHY
        self.cache[i] = v
        return v


@dataclass
class AdeposState:
    n_max: int
    active: int = 1

    def __post_init__(self):
        if self.n_max < 1 or self.n_max % 2 == 0:
            raise EvenOrEmptyPanel(f"n_max must be odd and >= 1, got {self.n_max}")
        if self.active < 1 or self.active > self.n_max or self.active % 2 == 0:
            raise InvalidParams(f"active={self.active} must be odd and within [1, {self.n_max}]")


def adepos_evaluate(ens: Ensemble, state: AdeposState, x, fixed=False):
    """Run the escalation policy on one sample.

    Returns ``(verdict, new_state, learners_executed)``. With ``fixed=True``
    every learner is consulted (the non-adaptive baseline).
    """
    ctx = ens.sample_context(x)
    n_max = ens.n_max
    active = n_max if fixed else state.active
    vote = majority_vote([ctx.verdict(i) for i in range(active)])
    while vote is Verdict.ANOMALOUS and active < n_max:
        active += 2
        vote = majority_vote([ctx.verdict(i) for i in range(active)])
    executed = len(ctx.cache)
    if vote is Verdict.ANOMALOUS:
        return Verdict.MAINTENANCE_ALARM, AdeposState(n_max, state.active if fixed else n_max), executed
    next_active = state.active if fixed else max(1, active - 2)
    return Verdict.HEALTHY, AdeposState(n_max, next_active), executed


@dataclass
class LifetimeReport:
    verdicts: list[Verdict]
    executed: list[int]
    L: int
    n_max: int
    maintenance_index: int | None = None

    @property
    def maintenance_flag(self) -> bool:
        return self.maintenance_index is not None

    @property
    def l_eff(self) -> list[int]:
        return [self.L * n for n in self.executed]

    @property
    def average_l_eff(self) -> float:
        if not self.executed:
            return 0.0
        return self.L * float(np.mean(self.executed))

    def __len__(self):
        return len(self.executed)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"{REPORT_HEADER} L={self.L} n_max={self.n_max}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "verdict", "learners_executed", "L_eff"])
        for i, (v, n) in enumerate(zip(self.verdicts, self.executed)):
            w.writerow([i, v.value, n, self.L * n])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "LifetimeReport":
        lines = text.splitlines()
        if not lines or not lines[0].startswith(REPORT_HEADER):
            raise FormatError("missing lifetime report header")
        meta = dict(tok.split("=", 1) for tok in lines[0][len(REPORT_HEADER):].split())
        rows = list(csv.DictReader(lines[1:]))
        verdicts = [Verdict(r["verdict"]) for r in rows]
        alarm = next((i for i, v in enumerate(verdicts) if v is Verdict.MAINTENANCE_ALARM), None)
        return cls(verdicts, [int(r["learners_executed"]) for r in rows],
                   int(meta["L"]), int(meta["n_max"]), alarm)


def run_lifetime(ens: Ensemble, samples: Iterable, *, initial_active=1, fixed=False,
                 halt_on_alarm=False) -> LifetimeReport:
    state = AdeposState(ens.n_max, initial_active)
    verdicts, executed = [], []
    alarm_at = None
    for idx, x in enumerate(samples):
        v, state, n = adepos_evaluate(ens, state, x, fixed=fixed)
        verdicts.append(v)
        executed.append(n)
        if v is Verdict.MAINTENANCE_ALARM and alarm_at is None:
            alarm_at = idx
            logger.info("maintenance alarm at sample %d", idx)
            if halt_on_alarm:
                break
    return LifetimeReport(verdicts, executed, ens.L, ens.n_max, alarm_at)


def train_ensemble(healthy, d, L, n_max, base_seed=0, *, mode=Mode.BOUNDARY, C=1.0, R=1.0,
                   theta_update=ThetaUpdate.LITERAL, method="opium", epochs=1, tol=None,
                   window=50, neuron_gen=False) -> Ensemble:
    """Train ``n_max`` learners (seeds ``base_seed + i``) on the same healthy rows.

    With ``neuron_gen=True`` every learner draws its first layer from one
    shared physical pool seeded with ``base_seed``.
    """
    if n_max < 1 or n_max % 2 == 0:
        raise EvenOrEmptyPanel(f"n_max must be odd and >= 1, got {n_max}")
    X = np.atleast_2d(np.asarray(healthy, dtype=np.float64))
    if X.shape[0] == 0:
        raise EmptyTrainingSet("no healthy samples to train on")
    pool = pmap = None
    if neuron_gen:
        pool, pmap = build_pool(d, L, n_max, base_seed)
        learners = [ng_learner(pool, pmap, i, mode, C=C, R=R, theta_update=theta_update)
                    for i in range(n_max)]
    else:
        learners = [init_base_learner(d, L, mode, base_seed + i, C=C, R=R,
                                      theta_update=theta_update) for i in range(n_max)]
    for bl in learners:
        if method == "batch":
            bl.train_batch(X)
        elif method == "opium":
            bl.train_online(X, epochs=epochs, tol=tol, window=window)
        else:
            raise InvalidParams(f"unknown training method {method!r}")
    return Ensemble(learners, pool=pool, pair_map=pmap)
