"""Virtual hidden neurons synthesized from a small physical pool.

Each virtual neuron is the difference of two physical pre-activations,
``p_k - p_j`` with ``j < k``, passed through the absolute value. This is the
same as a regular neuron with weights ``W_k - W_j`` and bias ``b_k - b_j``,
so ``L_phy`` physical neurons serve up to ``L_phy * (L_phy - 1) / 2`` virtual
ones and the input-layer multiplications are done only once per sample.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .elm import BaseLearner, Mode, ThetaUpdate
from .errors import DimensionMismatch, InvalidDimension
from .rng import random_layer


def required_physical_neurons(L: int, n_max: int) -> int:
    """Smallest ``L_phy`` with ``L_phy*(L_phy-1)/2 >= n_max*L`` (never below 2)."""
    need = n_max * L
    disc = 1 + 8 * need
    r = math.isqrt(disc)
    # ceil((1 + sqrt(disc)) / 2) evaluated exactly in integers
    n = (1 + r + 1) // 2 if r * r == disc else (1 + r) // 2 + 1
    while (n - 1) * (n - 2) // 2 >= need and n > 2:
        n -= 1
    return max(n, 2)


@dataclass(frozen=True)
class PhysicalPool:
    Wp: np.ndarray
    bp: np.ndarray
    seed: int = 0

    @property
    def L_phy(self) -> int:
        return self.Wp.shape[0]

    @property
    def d(self) -> int:
        return self.Wp.shape[1]

    def preactivations(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.d:
            raise DimensionMismatch(f"input has {x.shape[-1]} features, pool expects {self.d}")
        return x @ self.Wp.T + self.bp


@dataclass(frozen=True)
class PairMap:
    """Ordered ``(j, k)`` pairs, ``L`` consecutive entries per base learner."""

    pairs: np.ndarray
    L: int

    @property
    def n_learners(self) -> int:
        return len(self.pairs) // self.L

    def block(self, i: int) -> np.ndarray:
        if not 0 <= i < self.n_learners:
            raise IndexError(f"learner index {i} outside 0..{self.n_learners - 1}")
        return self.pairs[i * self.L:(i + 1) * self.L]


def build_pool(d: int, L: int, n_max: int, seed: int = 0) -> tuple[PhysicalPool, PairMap]:
    if d < 1 or L < 1 or n_max < 1:
        raise InvalidDimension(f"need d, L, n_max >= 1, got d={d}, L={L}, n_max={n_max}")
    l_phy = required_physical_neurons(L, n_max)
    Wp, bp = random_layer(seed, l_phy, d)
    pairs = list(itertools.islice(itertools.combinations(range(l_phy), 2), n_max * L))
    return PhysicalPool(Wp, bp, seed), PairMap(np.array(pairs, dtype=np.int64), L)


def virtual_from_preacts(p: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    return np.abs(p[..., pairs[:, 1]] - p[..., pairs[:, 0]])


def virtual_hidden(pool: PhysicalPool, pmap: PairMap, x) -> np.ndarray:
    """All ``n_max * L`` virtual activations for input ``x``."""
    return virtual_from_preacts(pool.preactivations(x), pmap.pairs)


def differenced_layer(pool: PhysicalPool, pairs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    j, k = pairs[:, 0], pairs[:, 1]
    return pool.Wp[k] - pool.Wp[j], pool.bp[k] - pool.bp[j]


def ng_learner(pool: PhysicalPool, pmap: PairMap, i: int, mode=Mode.BOUNDARY, *, C=1.0, R=1.0,
               theta_update=ThetaUpdate.LITERAL) -> BaseLearner:
    """Base learner ``i`` whose first layer is its block of virtual neurons."""
    W, b = differenced_layer(pool, pmap.block(i))
    return BaseLearner.from_weights(W, b, mode, C=C, R=R, seed=pool.seed,
                                    theta_update=theta_update)
