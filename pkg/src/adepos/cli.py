"""Command-line driver.

Every verb accepts ``--config FILE`` (YAML) and repeated ``--set key=value``
overrides; ``--dump-config`` prints the effective configuration and exits.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import experiment
from .calibration import loo_threshold
from .config import ExperimentConfig, dump_config, load_config, parse_override
from .dataset_io import load_feature_csv
from .elm import Mode, ThetaUpdate
from .ensemble import run_lifetime, train_ensemble
from .errors import AdeposError, ConfigError
from .features import fit_quantizer, quantize_array
from .neuron_gen import required_physical_neurons
from .power import (
    EnergyParams,
    aot_constants_from_circuit,
    average_power,
    op_count_ng,
    op_count_orig,
    ripple_spread,
    ripple_sweep,
)
from .serialization import load_model, save_model

logger = logging.getLogger("adepos")


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    changes = dict(parse_override(s) for s in args.set)
    if changes:
        cfg = cfg.replace(**changes)
    return cfg


def _quantized(table, q):
    return quantize_array(table.as_array(), q).astype(np.float64)


def _stream(cfg, path, q, use_model_quantizer):
    """Quantize a feature CSV; by default on a range fitted to its own prefix."""
    table = load_feature_csv(path)
    if not use_model_quantizer:
        n_train = max(2, math.ceil(cfg.train_fraction * len(table.features)))
        q = fit_quantizer(table.features[:n_train], cfg.quant_margin)
    elif q is None:
        raise ConfigError("model carries no quantizer")
    return _quantized(table, q)


def cmd_train(cfg, args):
    table = load_feature_csv(args.features)
    n = len(table.features)
    n_train = max(2, math.ceil(cfg.train_fraction * n))
    q = fit_quantizer(table.features[:n_train], cfg.quant_margin)
    Q = _quantized(table, q)
    ens = train_ensemble(
        Q[:n_train], cfg.d, cfg.L, cfg.n_max, args.seed,
        mode=Mode(cfg.mode), C=cfg.C, R=cfg.R, theta_update=ThetaUpdate(cfg.theta_update),
        method=cfg.method, epochs=cfg.epochs, tol=cfg.convergence_tol,
        window=cfg.convergence_window, neuron_gen=cfg.neuron_gen,
    )
    save_model(args.out, ens, q)
    print(f"trained {cfg.n_max} learners (L={cfg.L}) on {n_train} samples -> {args.out}")


def cmd_calibrate(cfg, args):
    ens, q = load_model(args.model)
    ens.fixed_point = cfg.fixed_point
    errs = [ens.residual_matrix(_stream(cfg, p, q, args.model_quantizer)).ravel()
            for p in args.healthy]
    ens.lam = loo_threshold(np.concatenate(errs), cfg.c)
    save_model(args.out or args.model, ens, q)
    print(f"lambda = {ens.lam!r}")


def cmd_run(cfg, args):
    if args.model:
        if not args.features:
            raise ConfigError("--model needs --features")
        ens, q = load_model(args.model)
        ens.fixed_point = cfg.fixed_point
        rep = run_lifetime(ens, _stream(cfg, args.features, q, args.model_quantizer),
                           initial_active=cfg.initial_active, fixed=args.fixed,
                           halt_on_alarm=cfg.halt_on_alarm)
        text = rep.to_csv()
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        logger.info("average L_eff %.3f, maintenance index %s", rep.average_l_eff, rep.maintenance_index)
        return
    if not args.out:
        raise ConfigError("run needs --out for the experiment reports")
    report = experiment.run_experiment(cfg, args.out)
    experiment.emit_reports(report, args.out)
    _print_summary(report.aggregates())


def _print_summary(agg):
    for key in ("mean_accuracy", "mean_false_positive_rate", "mean_average_l_eff",
                "neuron_reduction", "op_savings", "energy_savings_ng"):
        print(f"{key:26s} {agg[key]:.6g}")


def cmd_report(cfg, args):
    report = experiment.load_report(args.report)
    paths = experiment.emit_reports(report, args.out)
    _print_summary(report.aggregates())
    for p in paths:
        logger.info("wrote %s", p)


def cmd_synth(cfg, args):
    bearings = experiment.load_bearings(cfg.replace(source="synthetic"))
    experiment.write_fleet(args.out, bearings)
    print(f"wrote {len(bearings)} synthetic bearings to {args.out}")


def cmd_power(cfg, args):
    d, L, N = cfg.d, cfg.L, cfg.n_max
    orig, ng = op_count_orig(d, L, N), op_count_ng(d, L, N)
    print(f"physical neurons (NG)      {required_physical_neurons(L, N)}")
    print(f"ops per sample, original   {orig.total}")
    print(f"ops per sample, NG         {ng.total}")
    print(f"energy ratio orig/NG       {cfg.costs.energy(orig) / cfg.costs.energy(ng):.4f}")
    p = EnergyParams.from_powers(args.p_sleep, args.t_sleep, args.p_active, args.t_active)
    print(f"average power [W]          {average_power(p):.6g}")

    aot = aot_constants_from_circuit(args.aot_c, args.aot_r, args.aot_k, args.aot_vth)
    rows = ripple_sweep(aot)
    print(f"ripple spread COT [V]      {ripple_spread(rows, 'ripple_cot'):.6g}")
    print(f"ripple spread AOT [V]      {ripple_spread(rows, 'ripple_aot'):.6g}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write("# adepos ripple sweep v1\n")
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: repr(v) for k, v in r.items()})


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment configuration")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")
    common.add_argument("--dump-config", action="store_true",
                        help="print the effective configuration and exit")
    common.add_argument("-v", "--verbose", action="count", default=0)
    common.add_argument("--model-quantizer", action="store_true",
                        help="quantize streams with the model's stored range instead of "
                             "a range fitted to each stream's own training prefix")

    parser = argparse.ArgumentParser(prog="adepos", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("train", parents=[common], help="train an ensemble on one feature CSV")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("calibrate", parents=[common], help="set the threshold from healthy streams")
    p.add_argument("--model", required=True)
    p.add_argument("--healthy", nargs="+", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("run", parents=[common],
                       help="full experiment, or one lifetime with --model/--features")
    p.add_argument("--model")
    p.add_argument("--features")
    p.add_argument("--fixed", action="store_true", help="consult every learner on every sample")
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("power", parents=[common], help="op counts, energy and ripple sweep")
    p.add_argument("--p-sleep", type=float, default=12e-6)
    p.add_argument("--t-sleep", type=float, default=600.0)
    p.add_argument("--p-active", type=float, default=744e-6)
    p.add_argument("--t-active", type=float, default=114e-6)
    p.add_argument("--aot-c", type=float, default=10e-12)
    p.add_argument("--aot-r", type=float, default=1e5)
    p.add_argument("--aot-k", type=float, default=1e-5)
    p.add_argument("--aot-vth", type=float, default=0.45)
    p.add_argument("--out", help="CSV for the ripple sweep")
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic feature fleet")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", parents=[common], help="re-emit reports from report.json")
    p.add_argument("--report", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        if args.dump_config:
            sys.stdout.write(dump_config(cfg))
            return 0
        args.func(cfg, args)
    except AdeposError as exc:
        print(f"adepos: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"adepos: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
