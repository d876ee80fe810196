"""Versioned JSON documents for trained ensembles.

Floats are written with ``repr`` precision, so a save/load round trip
reproduces every weight bit for bit.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .elm import BaseLearner
from .ensemble import Ensemble
from .errors import FormatError
from .features import QuantParams
from .neuron_gen import PairMap, PhysicalPool

MODEL_FORMAT = "adepos-model"
MODEL_VERSION = 1


def _learner_to_dict(bl: BaseLearner) -> dict:
    return {
        "mode": bl.mode.value,
        "d": bl.d,
        "L": bl.L,
        "seed": bl.seed,
        "C": bl.C,
        "R": bl.R,
        "theta_update": bl.theta_update.value,
        "W": bl.W.ravel().tolist(),
        "b": bl.b.tolist(),
        "beta": bl.beta.ravel().tolist(),
        "theta": bl.theta.ravel().tolist(),
    }


def _learner_from_dict(doc: dict) -> BaseLearner:
    d, L = int(doc["d"]), int(doc["L"])
    beta = np.array(doc["beta"], dtype=np.float64)
    if doc["mode"] != "boundary":
        beta = beta.reshape(L, d)
    return BaseLearner(
        mode=doc["mode"],
        W=np.array(doc["W"], dtype=np.float64).reshape(L, d),
        b=np.array(doc["b"], dtype=np.float64),
        beta=beta,
        theta=np.array(doc["theta"], dtype=np.float64).reshape(L, L),
        R=float(doc["R"]),
        seed=int(doc["seed"]),
        C=float(doc["C"]),
        theta_update=doc["theta_update"],
    )


def model_to_dict(ens: Ensemble, quantizer: QuantParams | None = None) -> dict:
    pool = None
    if ens.pool is not None:
        pool = {
            "seed": ens.pool.seed,
            "L_phy": ens.pool.L_phy,
            "d": ens.pool.d,
            "Wp": ens.pool.Wp.ravel().tolist(),
            "bp": ens.pool.bp.tolist(),
            "L": ens.pair_map.L,
            "pairs": ens.pair_map.pairs.tolist(),
        }
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "lambda": ens.lam if math.isfinite(ens.lam) else None,
        "quantizer": None if quantizer is None else {"lo": list(quantizer.lo), "hi": list(quantizer.hi)},
        "pool": pool,
        "learners": [_learner_to_dict(bl) for bl in ens.learners],
    }


def model_from_dict(doc: dict) -> tuple[Ensemble, QuantParams | None]:
    if doc.get("format") != MODEL_FORMAT:
        raise FormatError(f"not a model document (format={doc.get('format')!r})")
    if doc.get("version") != MODEL_VERSION:
        raise FormatError(f"unsupported model version {doc.get('version')!r}")
    try:
        learners = [_learner_from_dict(x) for x in doc["learners"]]
        pool = pmap = None
        if doc.get("pool"):
            p = doc["pool"]
            shape = (int(p["L_phy"]), int(p["d"]))
            pool = PhysicalPool(np.array(p["Wp"], dtype=np.float64).reshape(shape),
                                np.array(p["bp"], dtype=np.float64), int(p["seed"]))
            pmap = PairMap(np.array(p["pairs"], dtype=np.int64).reshape(-1, 2), int(p["L"]))
        q = doc.get("quantizer")
        quant = QuantParams(tuple(q["lo"]), tuple(q["hi"])) if q else None
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed model document: {exc}") from exc
    lam = doc.get("lambda")
    ens = Ensemble(learners, lam=float("inf") if lam is None else float(lam), pool=pool, pair_map=pmap)
    return ens, quant


def save_model(path, ens: Ensemble, quantizer: QuantParams | None = None):
    Path(path).write_text(json.dumps(model_to_dict(ens, quantizer), indent=1) + "\n")


def load_model(path) -> tuple[Ensemble, QuantParams | None]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    return model_from_dict(doc)
