"""End-to-end lifetime experiment: train, leave-one-out calibrate, run, report.

For every seed, each bearing gets its own ensemble trained on the first
``train_fraction`` of its quantized feature stream. The threshold used on
bearing ``i`` comes from the residuals of all *healthy* bearings other than
``i`` (every learner, every sample). The ensemble then runs over bearing
``i``'s whole stream under ADEPOS control.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dataset_io
from .calibration import detection_metrics, gamma, loo_threshold, robustness_margin
from .config import ExperimentConfig
from .elm import Mode, ThetaUpdate
from .ensemble import run_lifetime, train_ensemble
from .errors import AdeposError, ConfigError, FormatError, InsufficientData
from .features import FeatureVector, fit_quantizer, quantize_array
from .power import op_count_ng, op_count_orig, run_op_count
from .neuron_gen import required_physical_neurons
from .synthetic import synthetic_fleet

logger = logging.getLogger(__name__)

REPORT_FORMAT = "adepos-experiment"
REPORT_VERSION = 1
FLEET_FORMAT = "adepos-fleet"


@dataclass
class BearingData:
    bearing_id: str
    faulty: bool
    features: np.ndarray


def write_fleet(out_dir, bearings: list[BearingData]):
    """Feature CSV per bearing plus a ``manifest.json`` naming its ground truth."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for b in bearings:
        name = f"bearing_{b.bearing_id}.csv"
        dataset_io.write_feature_csv(out / name, [FeatureVector.from_array(r) for r in b.features])
        entries.append({"id": b.bearing_id, "file": name, "faulty": bool(b.faulty)})
    doc = {"format": FLEET_FORMAT, "version": 1, "bearings": entries}
    (out / "manifest.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def read_fleet(directory) -> list[BearingData]:
    directory = Path(directory)
    try:
        doc = json.loads((directory / "manifest.json").read_text())
    except FileNotFoundError:
        raise ConfigError(f"{directory}: no manifest.json") from None
    if doc.get("format") != FLEET_FORMAT or doc.get("version") != 1:
        raise FormatError(f"{directory}/manifest.json is not a version-1 fleet manifest")
    out = []
    for e in doc["bearings"]:
        table = dataset_io.load_feature_csv(directory / e["file"])
        out.append(BearingData(str(e["id"]), bool(e["faulty"]), table.as_array()))
    return out


def load_bearings(cfg: ExperimentConfig) -> list[BearingData]:
    if cfg.source == "synthetic":
        fleet = synthetic_fleet(cfg.synthetic_samples, cfg.synthetic_fault_fraction, cfg.synthetic_seed)
        return [BearingData(b.bearing_id, b.faulty, b.table.as_array()) for b in fleet]
    if cfg.source == "features":
        if not cfg.features_dir:
            raise ConfigError("source=features needs features_dir")
        return read_fleet(cfg.features_dir)
    root = dataset_io.dataset_root_from_env(cfg.dataset_root)
    if not root:
        raise ConfigError("source=ims needs dataset_root or ADEPOS_DATASET_ROOT")
    bearings = []
    for name in cfg.ims_datasets:
        layout = dataset_io.IMS_LAYOUTS[str(name)]
        directory = Path(root) / cfg.ims_dirs.get(str(name), layout.directory)
        fileset = dataset_io.ImsFileSet.from_directory(directory, layout.channels)
        logger.info("dataset %s: %d files in %s", name, len(fileset), directory)
        feats = dataset_io.extract_bearing_features(fileset, layout.mapping, cfg.channel_reduce,
                                                    workers=cfg.workers)
        for b, fvs in feats.items():
            arr = np.array([fv.as_array() for fv in fvs])
            bearings.append(BearingData(f"{name}-{b}", b in layout.faulty, arr))
    return bearings


@dataclass
class BearingRun:
    seed: int
    bearing_id: str
    faulty: bool
    n_samples: int
    n_train: int
    lam: float
    alarm: bool
    maintenance_index: int | None
    average_l_eff: float
    gamma: float
    ops_adepos: int
    ops_fixed: int
    ops_adepos_ng: int
    ops_fixed_ng: int
    energy_adepos: float
    energy_fixed: float
    energy_adepos_ng: float
    energy_fixed_ng: float
    executed: list[int] = field(repr=False)


RUN_COLUMNS = [f.name for f in dataclasses.fields(BearingRun) if f.name != "executed"]


@dataclass
class ExperimentReport:
    config: dict
    runs: list[BearingRun]

    def aggregates(self) -> dict:
        return compute_aggregates(self.config["L"], self.config["n_max"], self.runs)

    def to_dict(self) -> dict:
        return {
            "format": REPORT_FORMAT,
            "version": REPORT_VERSION,
            "config": self.config,
            "runs": [dataclasses.asdict(r) for r in self.runs],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentReport":
        if doc.get("format") != REPORT_FORMAT or doc.get("version") != REPORT_VERSION:
            raise FormatError("not a version-1 experiment report")
        return cls(doc["config"], [BearingRun(**r) for r in doc["runs"]])


def compute_aggregates(L: int, n_max: int, runs: list) -> dict:
    """Per-seed accuracy, false positives, L_eff and robustness, then means."""
    if not runs:
        raise InsufficientData("no runs to aggregate")
    by_seed: dict[int, list] = {}
    for r in runs:
        by_seed.setdefault(int(_get(r, "seed")), []).append(r)
    per_seed = []
    for seed in sorted(by_seed):
        rs = by_seed[seed]
        m = detection_metrics([(bool(_get(r, "faulty")), bool(_get(r, "alarm"))) for r in rs])
        n_tot = sum(int(_get(r, "n_samples")) for r in rs)
        l_eff = sum(float(_get(r, "average_l_eff")) * int(_get(r, "n_samples")) for r in rs) / n_tot
        gh = [float(_get(r, "gamma")) for r in rs if not bool(_get(r, "faulty"))]
        gf = [float(_get(r, "gamma")) for r in rs if bool(_get(r, "faulty"))]
        per_seed.append({
            "seed": seed,
            "accuracy": m.accuracy,
            "false_positive_rate": m.false_positive_rate,
            "average_l_eff": l_eff,
            "rho": robustness_margin(gh, gf) if gh and gf else None,
        })

    def total(key):
        return sum(float(_get(r, key)) for r in runs)

    mean_l_eff = float(np.mean([s["average_l_eff"] for s in per_seed]))
    return {
        "per_seed": per_seed,
        "mean_accuracy": float(np.mean([s["accuracy"] for s in per_seed])),
        "mean_false_positive_rate": float(np.mean([s["false_positive_rate"] for s in per_seed])),
        "mean_average_l_eff": mean_l_eff,
        "fixed_l_eff": L * n_max,
        "neuron_reduction": L * n_max / mean_l_eff,
        "op_savings": total("ops_fixed") / total("ops_adepos"),
        "op_savings_ng": total("ops_fixed") / total("ops_adepos_ng"),
        "energy_savings": total("energy_fixed") / total("energy_adepos"),
        "energy_savings_ng": total("energy_fixed") / total("energy_adepos_ng"),
    }


def _get(r, key):
    return r[key] if isinstance(r, dict) else getattr(r, key)


def _prepare(cfg: ExperimentConfig, bearings: list[BearingData]):
    prepared = []
    for b in bearings:
        n = len(b.features)
        n_train = max(2, math.ceil(cfg.train_fraction * n))
        if n_train >= n:
            raise InsufficientData(f"bearing {b.bearing_id}: {n} samples leave nothing to test")
        q = fit_quantizer([FeatureVector.from_array(r) for r in b.features[:n_train]], cfg.quant_margin)
        prepared.append((b, quantize_array(b.features, q).astype(np.float64), n_train))
    return prepared


def run_seed(cfg: ExperimentConfig, prepared, seed: int) -> list[BearingRun]:
    base_seed = 1000 * seed
    ensembles, errors = [], []
    for b, Q, n_train in prepared:
        ens = train_ensemble(
            Q[:n_train], cfg.d, cfg.L, cfg.n_max, base_seed,
            mode=Mode(cfg.mode), C=cfg.C, R=cfg.R, theta_update=ThetaUpdate(cfg.theta_update),
            method=cfg.method, epochs=cfg.epochs, tol=cfg.convergence_tol,
            window=cfg.convergence_window, neuron_gen=cfg.neuron_gen,
        )
        ens.fixed_point = cfg.fixed_point
        ensembles.append(ens)
        errors.append(ens.residual_matrix(Q))

    costs = cfg.costs
    l_phy = required_physical_neurons(cfg.L, cfg.n_max)
    fixed_one = op_count_orig(cfg.d, cfg.L, cfg.n_max)
    fixed_one_ng = op_count_ng(cfg.d, cfg.L, cfg.n_max, l_phy)
    runs = []
    for i, ((b, Q, n_train), ens) in enumerate(zip(prepared, ensembles)):
        pooled = [errors[j].ravel() for j, (bj, _, _) in enumerate(prepared) if j != i and not bj.faulty]
        if not pooled:
            raise InsufficientData("leave-one-out needs at least one other healthy bearing")
        ens.lam = loo_threshold(np.concatenate(pooled), cfg.c)
        rep = run_lifetime(ens, Q, initial_active=cfg.initial_active, halt_on_alarm=cfg.halt_on_alarm)
        ops = run_op_count(rep, cfg.d, ng=False)
        ops_ng = run_op_count(rep, cfg.d, ng=True)
        n = len(rep)
        runs.append(BearingRun(
            seed=seed,
            bearing_id=b.bearing_id,
            faulty=b.faulty,
            n_samples=n,
            n_train=n_train,
            lam=ens.lam,
            alarm=rep.maintenance_flag,
            maintenance_index=rep.maintenance_index,
            average_l_eff=rep.average_l_eff,
            gamma=gamma(errors[i][n_train:, 0], errors[i][:n_train, 0]),
            ops_adepos=ops.total,
            ops_fixed=fixed_one.total * n,
            ops_adepos_ng=ops_ng.total,
            ops_fixed_ng=fixed_one_ng.total * n,
            energy_adepos=costs.energy(ops),
            energy_fixed=costs.energy(fixed_one) * n,
            energy_adepos_ng=costs.energy(ops_ng),
            energy_fixed_ng=costs.energy(fixed_one_ng) * n,
            executed=list(rep.executed),
        ))
    return runs


def _seed_job(args):
    cfg_dict, prepared, seed = args
    return run_seed(ExperimentConfig.from_dict(cfg_dict), prepared, seed)


def run_experiment(cfg: ExperimentConfig, out_dir=None, bearings=None) -> ExperimentReport:
    """Run every seed; results are ordered by (seed, bearing) regardless of workers.

    If a seed fails and ``out_dir`` is given, the finished seeds are written
    there together with ``failure.json`` before the error propagates.
    """
    if bearings is None:
        bearings = load_bearings(cfg)
    prepared = _prepare(cfg, bearings)
    runs: list[BearingRun] = []
    jobs = [(cfg.to_dict(), prepared, s) for s in cfg.seeds]
    try:
        if cfg.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(cfg.workers) as pool:
                for seed_runs in pool.map(_seed_job, jobs):
                    runs.extend(seed_runs)
        else:
            for job in jobs:
                runs.extend(_seed_job(job))
                logger.info("seed %d done", job[2])
    except AdeposError as exc:
        if out_dir is not None:
            _flush_partial(out_dir, cfg, runs, exc)
        raise
    report = ExperimentReport(cfg.to_dict(), runs)
    audit(report)
    return report


def _flush_partial(out_dir, cfg, runs, exc):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    done = sorted({r.seed for r in runs})
    failed = [s for s in cfg.seeds if s not in done]
    (out / "failure.json").write_text(json.dumps({
        "format": "adepos-failure", "version": 1, "error": f"{type(exc).__name__}: {exc}",
        "completed_seeds": done, "failed_or_pending_seeds": failed,
    }, indent=1, sort_keys=True) + "\n")
    if runs:
        (out / "runs.partial.csv").write_text(runs_csv(runs))


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def runs_csv(runs) -> str:
    buf = io.StringIO()
    buf.write("# adepos runs v1\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RUN_COLUMNS)
    for r in runs:
        w.writerow([_fmt(getattr(r, c)) for c in RUN_COLUMNS])
    return buf.getvalue()


def parse_runs_csv(text: str) -> list[dict]:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# adepos runs v1"):
        raise FormatError("missing runs header")
    rows = []
    for row in csv.DictReader(lines[1:]):
        row["seed"] = int(row["seed"])
        row["faulty"] = row["faulty"] == "True"
        row["alarm"] = row["alarm"] == "True"
        row["n_samples"] = int(row["n_samples"])
        rows.append(row)
    return rows


def audit(report: ExperimentReport, tol: float = 1e-12):
    """Recompute aggregates from the serialized per-run table and compare."""
    direct = report.aggregates()
    reparsed = compute_aggregates(report.config["L"], report.config["n_max"],
                                  parse_runs_csv(runs_csv(report.runs)))
    for key, val in direct.items():
        if key == "per_seed":
            continue
        if not math.isclose(val, reparsed[key], rel_tol=tol, abs_tol=tol):
            raise AdeposError(f"aggregate {key} does not match recomputation: {val} vs {reparsed[key]}")
    return direct


def emit_reports(report: ExperimentReport, out_dir) -> list[Path]:
    """Write the summary, per-run table and plot-data tables; return their paths."""
    if not report.runs:
        raise InsufficientData("empty report; nothing written")
    agg = audit(report)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}

    files["summary.json"] = json.dumps(
        {"format": "adepos-summary", "version": 1, **agg}, indent=1, sort_keys=True) + "\n"
    files["runs.csv"] = runs_csv(report.runs)

    buf = io.StringIO()
    buf.write("# adepos accuracy_vs_leff v1\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed", "accuracy", "false_positive_rate", "average_l_eff", "rho"])
    for s in agg["per_seed"]:
        w.writerow([s["seed"], _fmt(s["accuracy"]), _fmt(s["false_positive_rate"]),
                    _fmt(s["average_l_eff"]), _fmt(s["rho"])])
    files["accuracy_vs_leff.csv"] = buf.getvalue()

    def total(key):
        return sum(getattr(r, key) for r in report.runs)

    buf = io.StringIO()
    buf.write("# adepos energy v1\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["algorithm", "operations", "energy", "savings_vs_fixed"])
    base = total("energy_fixed")
    for name, ok, ek in (("fixed", "ops_fixed", "energy_fixed"),
                         ("fixed_ng", "ops_fixed_ng", "energy_fixed_ng"),
                         ("adepos", "ops_adepos", "energy_adepos"),
                         ("adepos_ng", "ops_adepos_ng", "energy_adepos_ng")):
        w.writerow([name, total(ok), _fmt(float(total(ek))), _fmt(base / total(ek))])
    files["energy.csv"] = buf.getvalue()

    buf = io.StringIO()
    buf.write("# adepos active_learners v1\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed", "bearing_id", "index", "learners_executed"])
    for r in report.runs:
        for i, n in enumerate(r.executed):
            w.writerow([r.seed, r.bearing_id, i, n])
    files["active_learners.csv"] = buf.getvalue()

    files["report.json"] = json.dumps(report.to_dict(), sort_keys=True) + "\n"

    paths = []
    for name, text in files.items():
        p = out / name
        p.write_text(text)
        paths.append(p)
    return paths


def load_report(path) -> ExperimentReport:
    try:
        return ExperimentReport.from_dict(json.loads(Path(path).read_text()))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
