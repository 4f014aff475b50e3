"""Monte-Carlo comparison of the plain log-scale GPE against double emulators.

Every replicate draws its own training and test designs (or, for an
ingested dataset, its own random train/test split), fits all requested
models on the same training set and scores them on the same test set.
Replicate ``r`` draws its randomness from ``SeedSequence([seed, 1, r])``,
so results do not depend on how replicates are scheduled.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .classifiers import SvmFitError
from .design import DEFAULT_CANDIDATES, maximin_lhd
from .ingest import read_dataset
from .mixture import CLASSIFIER_KINDS, DEFAULT_GAMMA, fit_double, fit_log_gpe, mixture_mean, mixture_var
from .scoring import ScoreRecord, crps_exact, rmse
from .simulators import BANANA_FORMS, GroundedSimSpec, make_grounded

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)

MODEL_NAMES = {"gpe": "GPE", "rf": "DE-RF", "svm": "DE-SVM", "oracle": "DE-Perf"}
_CALIBRATION_KEY = 0
_REPLICATE_KEY = 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings for one experiment; the TOML config file uses the same flat keys.

    Exactly one of ``simulator`` and ``dataset`` must be given.
    """

    simulator: str | None = "banana"
    dim: int = 2
    banana_form: str = "squared"
    grounded_volume: float = 0.5
    exponent: float = 0.5
    dataset: str | None = None
    n_train: int = 60
    n_test: int = 500
    n_reps: int = 10
    kernel: str | None = None
    method: str = "reml"
    classifiers: tuple[str, ...] = CLASSIFIER_KINDS
    gamma: float = DEFAULT_GAMMA
    g: float = 0.0
    seed: int = 0
    n_candidates: int = DEFAULT_CANDIDATES
    n_mc: int = 100_000
    ntree: int = 500
    workers: int = 1
    keep_records: bool = False

    def __post_init__(self):
        object.__setattr__(self, "classifiers", tuple(self.classifiers))
        if (self.simulator is None) == (self.dataset is None):
            raise ConfigError("set exactly one of 'simulator' and 'dataset'")
        for kind in self.classifiers:
            if kind not in CLASSIFIER_KINDS:
                raise ConfigError(f"unknown classifier {kind!r}; expected one of {CLASSIFIER_KINDS}")
        if self.n_reps < 1:
            raise ConfigError("n_reps must be at least 1")
        if self.dataset is None:
            q = self.input_dim + 1
            if self.n_train <= q + 2:
                raise ConfigError(f"n_train must exceed q + 2 = {q + 2}")
        if self.n_test < 1:
            raise ConfigError("n_test must be positive")
        if not 0 < self.grounded_volume < 1:
            raise ConfigError("grounded_volume must lie in (0, 1)")
        if self.exponent <= 0 or self.gamma <= 0:
            raise ConfigError("exponent and gamma must be positive")
        if self.banana_form not in BANANA_FORMS:
            raise ConfigError(f"banana_form must be one of {BANANA_FORMS}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    @property
    def input_dim(self) -> int:
        return {"dp": 3, "gamma": 1}.get(self.simulator, self.dim)

    @property
    def kernel_family(self) -> str:
        if self.kernel is not None:
            return self.kernel
        return "matern52" if self.dataset is None else "matern32"

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        clean = {}
        for key, value in data.items():
            default = getattr(cls, key, None) if key != "classifiers" else ()
            clean[key] = _coerce(key, value, default)
        if "dataset" in clean and "simulator" not in clean:
            clean["simulator"] = None
        return cls(**clean)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path, "rb") as fh:
            try:
                data = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(data)


def _coerce(key, value, default):
    if key == "classifiers":
        if isinstance(value, str):
            value = [v.strip() for v in value.split(",") if v.strip()]
        if not isinstance(value, (list, tuple)) or not all(isinstance(v, str) for v in value):
            raise ConfigError("'classifiers' must be a list of strings")
        return tuple(value)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{key!r} must be a boolean")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key!r} must be an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key!r} must be a number")
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"{key!r} must be a string")
    return value


@dataclass
class ScoreRow:
    model: str
    replicate: int
    mean_crps: float
    rmse: float
    status: str = "ok"
    records: list[ScoreRecord] = field(default_factory=list, repr=False)


@dataclass
class ScoreTable:
    rows: list[ScoreRow]
    config: ExperimentConfig | None = None
    simulator: dict | None = None

    def __len__(self):
        return len(self.rows)

    @property
    def models(self) -> list[str]:
        seen = []
        for r in self.rows:
            if r.model not in seen:
                seen.append(r.model)
        return seen

    def column(self, model: str, metric: str = "mean_crps", ok_only: bool = True) -> np.ndarray:
        return np.array(
            [getattr(r, metric) for r in self.rows
             if r.model == model and (r.status == "ok" or not ok_only)],
            dtype=float,
        )

    def median(self, model: str, metric: str = "mean_crps") -> float:
        col = self.column(model, metric)
        return float(np.median(col)) if col.size else math.nan


class LookupSimulator:
    """Answers with the stored output for inputs that appear in a dataset."""

    def __init__(self, X, y):
        self._table = {tuple(row): float(v) for row, v in zip(np.asarray(X, float), y)}

    def __call__(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        try:
            return np.array([self._table[tuple(row)] for row in X])
        except KeyError as exc:
            raise KeyError(f"input {exc.args[0]} is not part of the dataset") from None


def _rng(*key) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(list(key)))


def _score(model, X, y, keep_records: bool):
    pm = model.predict(X)
    crps = np.asarray(crps_exact(pm, y), dtype=float)
    means = np.asarray(mixture_mean(pm), dtype=float)
    records = []
    if keep_records:
        var = np.asarray(mixture_var(pm), dtype=float)
        records = [
            ScoreRecord(i, float(y[i]), float(means[i]), float(var[i]), float(crps[i]),
                        float((means[i] - y[i]) ** 2))
            for i in range(y.size)
        ]
    return float(np.mean(crps)), rmse(means, y), records


def _model_keys(config: ExperimentConfig) -> list[str]:
    return ["gpe", *config.classifiers]


def _failed_rows(keys, rep, status):
    return [ScoreRow(MODEL_NAMES[k], rep, math.nan, math.nan, status) for k in keys]


def run_replicate(config: ExperimentConfig, rep: int, sim=None, data=None) -> list[ScoreRow]:
    rng = _rng(config.seed, _REPLICATE_KEY, rep)
    keys = _model_keys(config)
    g = config.g
    try:
        if data is None:
            Xtr = maximin_lhd(config.n_train, sim.d, rng, config.n_candidates).X
            Xte = maximin_lhd(config.n_test, sim.d, rng, config.n_candidates).X
            ytr, yte = np.asarray(sim(Xtr), float), np.asarray(sim(Xte), float)
            oracle = sim
        else:
            X, y = data
            perm = rng.permutation(X.shape[0])
            test, rest = perm[:config.n_test], perm[config.n_test:]
            train = rng.choice(rest, size=config.n_train, replace=False)
            Xtr, ytr, Xte, yte = X[train], y[train], X[test], y[test]
            oracle = LookupSimulator(X, y)
    except Exception as exc:  # noqa: BLE001 -- any simulator failure aborts the replicate
        logger.error("replicate %d aborted: %s", rep, exc)
        return _failed_rows(keys, rep, f"aborted: {exc}")

    common = dict(family=config.kernel_family, method=config.method)
    rows = []
    for k, key in enumerate(keys):
        name = MODEL_NAMES[key]
        try:
            if key == "gpe":
                model = fit_log_gpe(Xtr, ytr, g, config.gamma, **common)
            else:
                model = fit_double(
                    Xtr, ytr, g, config.gamma, classifier_kind=key,
                    rng=_rng(config.seed, _REPLICATE_KEY, rep, k + 1),
                    oracle=oracle, ntree=config.ntree, **common,
                )
            crps, err, records = _score(model, Xte, yte, config.keep_records)
            rows.append(ScoreRow(name, rep, crps, err, "ok", records))
        except (SvmFitError, ValueError, np.linalg.LinAlgError, RuntimeError) as exc:
            logger.warning("replicate %d, %s failed: %s", rep, name, exc)
            rows.append(ScoreRow(name, rep, math.nan, math.nan, f"failed: {exc}"))
    return rows


def build_simulator(config: ExperimentConfig) -> GroundedSimSpec:
    rng = _rng(config.seed, _CALIBRATION_KEY)
    if config.simulator in ("banana", "dp"):
        return make_grounded(config.simulator, config.input_dim, config.grounded_volume, config.exponent,
                             g=config.g, n_mc=config.n_mc, rng=rng, banana_form=config.banana_form)
    if config.simulator == "gamma":
        return GroundedSimSpec("gamma", 1, g=config.g, alpha=config.exponent)
    raise ConfigError(f"simulator {config.simulator!r} is not supported by the harness")


def _replicate_task(args):
    config, rep, sim, data = args
    return run_replicate(config, rep, sim, data)


def run_experiment(config: ExperimentConfig, workers: int | None = None) -> ScoreTable:
    workers = config.workers if workers is None else workers
    sim, data, sim_info = None, None, None
    if config.dataset is not None:
        X, y = read_dataset(config.dataset)
        if y is None:
            raise ConfigError(f"{config.dataset}: dataset has no 'y' column")
        if config.n_test + config.n_train > X.shape[0]:
            raise ConfigError(
                f"dataset has {X.shape[0]} runs; cannot draw {config.n_test} test "
                f"and {config.n_train} training runs"
            )
        data = (X, y)
    else:
        sim = build_simulator(config)
        sim_info = sim.to_dict()

    tasks = [(config, rep, sim, data) for rep in range(config.n_reps)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_replicate_task, tasks))
    else:
        results = [_replicate_task(t) for t in tasks]
    rows = [row for res in results for row in res]
    return ScoreTable(rows, config, sim_info)


def _quartiles(col: np.ndarray) -> dict:
    if col.size == 0:
        return {"n": 0, "median": None, "q1": None, "q3": None}
    q1, med, q3 = np.quantile(col, [0.25, 0.5, 0.75])
    return {"n": int(col.size), "median": float(med), "q1": float(q1), "q3": float(q3)}


def emit_report(table: ScoreTable, out_dir) -> Path:
    """Write scores.csv, summary.json and one long-format CSV per model."""
    if not table.rows:
        raise ValueError("empty score table")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    with (out_dir / "scores.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "replicate", "mean_crps", "rmse", "status"])
        for r in table.rows:
            w.writerow([r.model, r.replicate, repr(r.mean_crps), repr(r.rmse), r.status])

    summary = {}
    for model in table.models:
        summary[model] = {
            "mean_crps": _quartiles(table.column(model, "mean_crps")),
            "rmse": _quartiles(table.column(model, "rmse")),
            "failures": sum(1 for r in table.rows if r.model == model and r.status != "ok"),
        }
        slug = model.lower().replace("-", "_")
        with (out_dir / f"boxplot_{slug}.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["model", "replicate", "metric", "value"])
            for r in table.rows:
                if r.model == model and r.status == "ok":
                    w.writerow([model, r.replicate, "crps", repr(r.mean_crps)])
                    w.writerow([model, r.replicate, "rmse", repr(r.rmse)])

    meta = {"models": summary}
    if table.config is not None:
        meta["config"] = {k: (list(v) if isinstance(v, tuple) else v)
                          for k, v in asdict(table.config).items()}
    if table.simulator is not None:
        meta["simulator"] = table.simulator
    with (out_dir / "summary.json").open("w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)

    if any(r.records for r in table.rows):
        with (out_dir / "records.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["model", "replicate", "index", "observed", "mean", "var", "crps", "squared_error"])
            for r in table.rows:
                for rec in r.records:
                    w.writerow([r.model, r.replicate, rec.index, repr(rec.observed), repr(rec.mean),
                                repr(rec.var), repr(rec.crps), repr(rec.squared_error)])
    return out_dir
