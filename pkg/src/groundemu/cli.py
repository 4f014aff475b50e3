"""Command line entry point: ``groundemu <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import pickle
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .design import lhd, maximin_lhd, write_design_csv, read_design_csv
from .experiment import ExperimentConfig, build_simulator, emit_report, run_experiment
from .ingest import extract_qoi, load_ensemble, read_dataset, write_dataset
from .mixture import PredictiveMixture, fit_double, fit_log_gpe, mixture_mean, mixture_var
from .scoring import crps_exact, rmse

logger = logging.getLogger("groundemu")

MODEL_FILE = "model.pkl"


class CliError(Exception):
    pass


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_design(args) -> None:
    if args.candidates > 1 and args.n > 1:
        design = maximin_lhd(args.n, args.d, args.seed, args.candidates)
    else:
        design = lhd(args.n, args.d, args.seed)
    path = write_design_csv(design, _out_dir(args.out) / "design.csv")
    print(path)


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def cmd_simulate(args) -> None:
    cfg = _load_config(args)
    if cfg.simulator is None:
        raise CliError("the config names a dataset, not a simulator")
    sim = build_simulator(cfg)
    X = read_design_csv(args.design)
    out = _out_dir(args.out)
    write_dataset(X, sim(X), out / "dataset.csv")
    (out / "simulator.json").write_text(json.dumps(sim.to_dict(), indent=2, sort_keys=True))
    print(out / "dataset.csv")


def cmd_fit(args) -> None:
    X, y = read_dataset(args.data)
    if y is None:
        raise CliError(f"{args.data} has no 'y' column")
    common = dict(family=args.kernel, method=args.method)
    if args.model == "gpe":
        model = fit_log_gpe(X, y, args.g, args.gamma, **common)
    else:
        model = fit_double(X, y, args.g, args.gamma, classifier_kind=args.model,
                           rng=args.seed if args.seed is not None else 0, ntree=args.ntree, **common)
    path = _out_dir(args.out) / MODEL_FILE
    with path.open("wb") as fh:
        pickle.dump({"format": "groundemu-model", "version": __version__, "model": model}, fh)
    print(path)


def _load_model(path):
    with open(path, "rb") as fh:
        blob = pickle.load(fh)
    if not isinstance(blob, dict) or blob.get("format") != "groundemu-model":
        raise CliError(f"{path} is not a groundemu model file")
    return blob["model"]


PRED_COLUMNS = ["p", "m", "v", "g", "gamma", "mean", "var"]


def cmd_predict(args) -> None:
    model = _load_model(args.model)
    X, y = read_dataset(args.data)
    pm = model.predict(X)
    cols = {
        "p": np.broadcast_to(pm.p, (X.shape[0],)),
        "m": pm.m,
        "v": pm.v,
        "g": np.full(X.shape[0], pm.g),
        "gamma": np.full(X.shape[0], pm.gamma),
        "mean": mixture_mean(pm),
        "var": mixture_var(pm),
    }
    header = [f"x{j + 1}" for j in range(X.shape[1])] + (["y"] if y is not None else []) + PRED_COLUMNS
    path = _out_dir(args.out) / "predictions.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(X.shape[0]):
            row = list(X[i]) + ([y[i]] if y is not None else []) + [cols[c][i] for c in PRED_COLUMNS]
            w.writerow([repr(float(v)) for v in row])
    print(path)


def cmd_score(args) -> None:
    with open(args.predictions, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        header = reader.fieldnames or []
    missing = [c for c in ["y", *PRED_COLUMNS[:5]] if c not in header]
    if missing:
        raise CliError(f"{args.predictions}: missing columns {missing}")
    col = {c: np.array([float(r[c]) for r in rows]) for c in header}
    pm = PredictiveMixture(col["p"], col["m"], col["v"], float(col["g"][0]), float(col["gamma"][0]))
    means = col["mean"] if "mean" in col else mixture_mean(pm)
    crps = np.atleast_1d(crps_exact(pm, col["y"]))
    path = _out_dir(args.out) / "scores.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "rmse", "mean_crps"])
        w.writerow([len(rows), repr(rmse(means, col["y"])), repr(float(np.mean(crps)))])
    print(path)


def cmd_experiment(args) -> None:
    if not args.config:
        raise CliError("experiment needs --config")
    cfg = _load_config(args)
    table = run_experiment(cfg, workers=args.workers)
    out = emit_report(table, args.out)
    for model in table.models:
        print(f"{model}: median mean CRPS {table.median(model):.6g}, "
              f"median RMSE {table.median(model, 'rmse'):.6g}")
    print(out)


def cmd_ingest(args) -> None:
    ens = load_ensemble(args.inputs, args.traces) if args.traces else load_ensemble(args.inputs)
    X, y = extract_qoi(ens, args.t_star, args.g)
    out = _out_dir(args.out)
    write_dataset(X, y, out / "dataset.csv")
    scaling = {"names": list(ens.names), "lower": ens.lower.tolist(), "upper": ens.upper.tolist(),
               "t_star": args.t_star, "runs_kept": int(y.size), "runs_total": ens.n}
    (out / "scaling.json").write_text(json.dumps(scaling, indent=2))
    print(out / "dataset.csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="groundemu", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=False):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=".", help="output directory")
        if config:
            p.add_argument("--config", default=None, help="TOML config file")

    p = sub.add_parser("design", help="write a (maximin) Latin hypercube design")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--candidates", type=int, default=30)
    common(p)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("simulate", help="evaluate a simulator over a design")
    p.add_argument("--design", required=True)
    common(p, config=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit and save an emulator")
    p.add_argument("--data", required=True)
    p.add_argument("--model", choices=["gpe", "rf", "svm"], default="rf")
    p.add_argument("--g", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=1e-6)
    p.add_argument("--kernel", default="matern52")
    p.add_argument("--method", choices=["reml", "mle"], default="reml")
    p.add_argument("--ntree", type=int, default=500)
    common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict a dataset with a saved emulator")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("score", help="CRPS and RMSE of stored predictions")
    p.add_argument("--predictions", required=True)
    common(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("experiment", help="run the Monte-Carlo comparison")
    p.add_argument("--workers", type=int, default=None)
    common(p, config=True)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("ingest", help="turn a run ensemble into a dataset at one time")
    p.add_argument("--inputs", required=True, help="ensemble directory, or inputs.csv with --traces")
    p.add_argument("--traces", default=None)
    p.add_argument("--t-star", type=float, required=True)
    p.add_argument("--g", type=float, default=0.0)
    common(p)
    p.set_defaults(func=cmd_ingest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (CliError, ValueError, OSError, KeyError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"groundemu {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
