"""Single-hidden-layer ELM base learner with batch and OPIUM training.

Hidden activations use the absolute value nonlinearity ``h = |W x + b|``.
Two decoders are supported: a boundary learner regresses every healthy
input onto a scalar target ``R`` and an autoencoder reconstructs ``x``.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EmptyTrainingSet, InvalidDimension, NonFiniteUpdate
from .rng import random_layer

logger = logging.getLogger(__name__)

PINV_RCOND = 1e-10


class Mode(str, enum.Enum):
    BOUNDARY = "boundary"
    AUTOENCODER = "autoencoder"


class ThetaUpdate(str, enum.Enum):
    """How the OPIUM gain matrix evolves between samples.

    ``LITERAL`` keeps theta fixed at ``C * I`` (a normalised LMS step);
    ``RLS`` applies the recursive least-squares downdate after every sample.
    """

    LITERAL = "literal"
    RLS = "rls"


@dataclass
class BaseLearner:
    mode: Mode
    W: np.ndarray
    b: np.ndarray
    beta: np.ndarray
    theta: np.ndarray
    R: float = 1.0
    seed: int = 0
    C: float = 1.0
    theta_update: ThetaUpdate = ThetaUpdate.LITERAL
    n_updates: int = field(default=0, compare=False)

    def __post_init__(self):
        self.mode = Mode(self.mode)
        self.theta_update = ThetaUpdate(self.theta_update)
        self.W = np.asarray(self.W, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64).ravel()
        if self.W.ndim != 2 or self.W.shape[0] < 1 or self.W.shape[1] < 1:
            raise InvalidDimension(f"W must be a non-empty L x d matrix, got shape {self.W.shape}")
        L, d = self.W.shape
        if self.b.shape != (L,):
            raise DimensionMismatch(f"bias length {self.b.size} != L={L}")
        self.beta = np.asarray(self.beta, dtype=np.float64)
        want = (L,) if self.mode is Mode.BOUNDARY else (L, d)
        if self.beta.shape != want:
            raise DimensionMismatch(f"beta shape {self.beta.shape} != {want} for {self.mode.value}")
        self.theta = np.asarray(self.theta, dtype=np.float64)
        if self.theta.shape != (L, L):
            raise DimensionMismatch(f"theta shape {self.theta.shape} != {(L, L)}")

    @classmethod
    def from_weights(cls, W, b, mode=Mode.BOUNDARY, *, C=1.0, R=1.0, seed=0,
                     theta_update=ThetaUpdate.LITERAL) -> "BaseLearner":
        """Learner with the given first layer, zero output weights and theta = C*I."""
        W = np.asarray(W, dtype=np.float64)
        if W.ndim != 2:
            raise InvalidDimension(f"W must be 2-D, got {W.ndim}-D")
        L, d = W.shape
        mode = Mode(mode)
        beta = np.zeros(L) if mode is Mode.BOUNDARY else np.zeros((L, d))
        return cls(mode=mode, W=W, b=b, beta=beta, theta=C * np.eye(L), R=float(R),
                   seed=int(seed), C=float(C), theta_update=theta_update)

    @property
    def L(self) -> int:
        return self.W.shape[0]

    @property
    def d(self) -> int:
        return self.W.shape[1]

    def _check_x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.d:
            raise DimensionMismatch(f"input has {x.shape[-1]} features, learner expects {self.d}")
        return x

    def hidden(self, x) -> np.ndarray:
        """``|W x + b|`` for one input (shape ``(d,)``) or a batch ``(n, d)``."""
        x = self._check_x(x)
        return np.abs(x @ self.W.T + self.b)

    def decode(self, h) -> np.ndarray | float:
        h = np.asarray(h, dtype=np.float64)
        if h.shape[-1] != self.L:
            raise DimensionMismatch(f"hidden vector has {h.shape[-1]} entries, expected {self.L}")
        out = h @ self.beta
        return float(out) if out.ndim == 0 else out

    def predict(self, x):
        return self.decode(self.hidden(x))

    def residual_from_hidden(self, x, h, squared=False):
        out = self.decode(h)
        if self.mode is Mode.BOUNDARY:
            eps = np.abs(self.R - np.asarray(out))
            if squared:
                eps = eps**2
        else:
            diff = np.asarray(x, dtype=np.float64) - out
            eps = np.sum(diff**2, axis=-1)
            if not squared:
                eps = np.sqrt(eps)
        return float(eps) if np.ndim(eps) == 0 else eps

    def residual(self, x, squared=False):
        """Absolute (boundary) or Euclidean (autoencoder) deviation.

        Works on one input or a batch. ``squared=True`` returns the squared
        norm used as the least-squares training objective.
        """
        x = self._check_x(x)
        return self.residual_from_hidden(x, self.hidden(x), squared=squared)

    def targets(self, X: np.ndarray) -> np.ndarray:
        if self.mode is Mode.BOUNDARY:
            return np.full(X.shape[0], self.R)
        return X

    def train_batch(self, X) -> "BaseLearner":
        """Output weights ``pinv(H) @ T`` from the whole training matrix."""
        X = np.atleast_2d(self._check_x(X))
        if X.shape[0] == 0:
            raise EmptyTrainingSet("train_batch needs at least one row")
        H = self.hidden(X)
        self.beta = np.linalg.pinv(H, rcond=PINV_RCOND) @ self.targets(X)
        return self

    def opium_update(self, x) -> "BaseLearner":
        """One online step of the pseudo-inverse update on sample ``x``."""
        x = self._check_x(x)
        if x.ndim != 1:
            raise DimensionMismatch("opium_update takes a single sample")
        h = self.hidden(x)
        with np.errstate(invalid="ignore", over="ignore"):
            th = self.theta @ h
            eta = th / (1.0 + h @ th)
            if self.mode is Mode.BOUNDARY:
                beta = self.beta + eta * (self.R - h @ self.beta)
            else:
                beta = self.beta + np.outer(eta, x - h @ self.beta)
        if not (np.all(np.isfinite(eta)) and np.all(np.isfinite(beta))):
            raise NonFiniteUpdate(f"non-finite OPIUM update at step {self.n_updates}")
        self.beta = beta
        if self.theta_update is ThetaUpdate.RLS:
            theta = self.theta - np.outer(eta, th)
            theta = 0.5 * (theta + theta.T)
            if not np.all(np.isfinite(theta)):
                raise NonFiniteUpdate(f"non-finite theta at step {self.n_updates}")
            self.theta = theta
        self.n_updates += 1
        return self

    def train_online(self, X, epochs=1, tol=None, window=50) -> int:
        """Feed rows of ``X`` through :meth:`opium_update`.

        With ``tol`` set, stops once the relative change of beta over the last
        ``window`` updates drops below ``tol``. Returns the number of updates.
        """
        X = np.atleast_2d(self._check_x(X))
        if X.shape[0] == 0:
            raise EmptyTrainingSet("train_online needs at least one row")
        history = []
        n = 0
        for _ in range(epochs):
            for x in X:
                self.opium_update(x)
                n += 1
                if tol is None:
                    continue
                history.append(self.beta.copy())
                if len(history) > window:
                    old = history.pop(0)
                    scale = np.linalg.norm(self.beta)
                    if scale > 0 and np.linalg.norm(self.beta - old) / scale < tol:
                        logger.debug("beta converged after %d updates", n)
                        return n
        return n


def init_base_learner(d, L, mode=Mode.BOUNDARY, seed=0, *, C=1.0, R=1.0,
                      theta_update=ThetaUpdate.LITERAL) -> BaseLearner:
    """Fresh learner with SplitMix64 uniform [-1, 1) first-layer weights."""
    if d < 1 or L < 1:
        raise InvalidDimension(f"need d >= 1 and L >= 1, got d={d}, L={L}")
    W, b = random_layer(seed, L, d)
    return BaseLearner.from_weights(W, b, mode, C=C, R=R, seed=seed, theta_update=theta_update)
