"""Loading externally produced run ensembles with irregular time traces.

Two CSV files describe an ensemble:

* ``inputs.csv`` -- ``run_id,k1,k2,DhH,DhM,DhO,DcH,DcM,DcO``
* ``traces.csv`` -- ``run_id,t,value`` in long format, rows grouped by run
  with ``t`` strictly increasing inside each run.

Traces are put on common time knots with a natural cubic spline; a scalar
output per run is then read off at a chosen time.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

logger = logging.getLogger(__name__)

INPUT_NAMES = ("k1", "k2", "DhH", "DhM", "DhO", "DcH", "DcM", "DcO")
GROUND_TOL = float(np.sqrt(np.finfo(float).eps))


class IngestError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Trace:
    t: np.ndarray
    value: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        value = np.asarray(self.value, dtype=float)
        if t.shape != value.shape or t.ndim != 1:
            raise IngestError("trace times and values must be 1-D of equal length")
        if t.size < 2:
            raise IngestError("a trace needs at least two samples")
        if np.any(np.diff(t) <= 0):
            raise IngestError("trace times must be strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "value", value)

    def covers(self, t) -> bool:
        t = np.atleast_1d(t)
        return bool(np.all((t >= self.t[0]) & (t <= self.t[-1])))


@dataclass(eq=False)
class RunEnsemble:
    run_ids: list[str]
    raw_inputs: np.ndarray
    traces: list[Trace]
    names: tuple[str, ...] = INPUT_NAMES
    lower: np.ndarray = field(default=None)
    upper: np.ndarray = field(default=None)

    def __post_init__(self):
        self.raw_inputs = np.atleast_2d(np.asarray(self.raw_inputs, dtype=float))
        if len(self.run_ids) != self.raw_inputs.shape[0] or len(self.traces) != len(self.run_ids):
            raise IngestError("run ids, inputs and traces must have one entry per run")
        if self.lower is None:
            self.lower = self.raw_inputs.min(axis=0)
        if self.upper is None:
            self.upper = self.raw_inputs.max(axis=0)

    @property
    def n(self) -> int:
        return len(self.run_ids)

    @property
    def dim(self) -> int:
        return self.raw_inputs.shape[1]

    @property
    def inputs(self) -> np.ndarray:
        """Inputs rescaled to [0, 1] per column."""
        return self.scale(self.raw_inputs)

    def _span(self):
        span = self.upper - self.lower
        return np.where(span > 0, span, 1.0)

    def scale(self, raw):
        return (np.asarray(raw, dtype=float) - self.lower) / self._span()

    def unscale(self, unit):
        return self.lower + np.asarray(unit, dtype=float) * self._span()


def _read_rows(path: Path, expected: list[str]) -> list[list[str]]:
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise IngestError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    missing = [c for c in expected if c not in header]
    if missing:
        raise IngestError(f"{path}: missing columns {missing}")
    pos = [header.index(c) for c in expected]
    return [[r[i].strip() for i in pos] for r in rows[1:]]


def load_ensemble(path, traces_path=None) -> RunEnsemble:
    """Read ``inputs.csv`` and ``traces.csv`` from a directory (or two explicit files)."""
    path = Path(path)
    if traces_path is None:
        inputs_path, traces_path = path / "inputs.csv", path / "traces.csv"
    else:
        inputs_path, traces_path = path, Path(traces_path)

    rows = _read_rows(inputs_path, ["run_id", *INPUT_NAMES])
    run_ids = [r[0] for r in rows]
    if len(set(run_ids)) != len(run_ids):
        raise IngestError(f"{inputs_path}: duplicated run ids")
    raw = np.array([[float(v) for v in r[1:]] for r in rows], dtype=float).reshape(-1, len(INPUT_NAMES))

    grouped: dict[str, tuple[list[float], list[float]]] = {}
    order: list[str] = []
    for rid, t, val in _read_rows(traces_path, ["run_id", "t", "value"]):
        if rid not in grouped:
            grouped[rid] = ([], [])
            order.append(rid)
        elif order[-1] != rid:
            raise IngestError(f"{traces_path}: rows of run {rid!r} are not contiguous")
        grouped[rid][0].append(float(t))
        grouped[rid][1].append(float(val))

    unknown = set(grouped) - set(run_ids)
    if unknown:
        raise IngestError(f"{traces_path}: traces for unknown runs {sorted(unknown)}")
    traces = []
    for rid in run_ids:
        if rid not in grouped:
            raise IngestError(f"run {rid!r} has no trace")
        t, val = grouped[rid]
        try:
            traces.append(Trace(np.array(t), np.array(val)))
        except IngestError as exc:
            raise IngestError(f"run {rid!r}: {exc}") from None
    return RunEnsemble(run_ids, raw, traces)


def write_ensemble(ens: RunEnsemble, out_dir) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with (out_dir / "inputs.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["run_id", *ens.names])
        for rid, row in zip(ens.run_ids, ens.raw_inputs):
            w.writerow([rid, *(repr(float(v)) for v in row)])
    with (out_dir / "traces.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["run_id", "t", "value"])
        for rid, tr in zip(ens.run_ids, ens.traces):
            for t, v in zip(tr.t, tr.value):
                w.writerow([rid, repr(float(t)), repr(float(v))])
    return out_dir


def spline_interp(trace: Trace, knots) -> np.ndarray:
    """Natural cubic spline through the trace, evaluated at ``knots``."""
    knots = np.asarray(knots, dtype=float)
    if not trace.covers(knots):
        raise IngestError(
            f"knots must lie within the trace range [{trace.t[0]}, {trace.t[-1]}]"
        )
    spline = CubicSpline(trace.t, trace.value, bc_type="natural", extrapolate=False)
    out = spline(knots)
    # reproduce stored samples bit-for-bit where a knot hits a sample time
    idx = np.searchsorted(trace.t, knots)
    hit = (idx < trace.t.size) & (trace.t[np.minimum(idx, trace.t.size - 1)] == knots)
    out = np.where(hit, trace.value[np.minimum(idx, trace.t.size - 1)], out)
    return out


def interpolate_to_knots(ens: RunEnsemble, knots):
    """Matrix of spline values (runs x knots) for the runs covering every knot."""
    keep = [i for i, tr in enumerate(ens.traces) if tr.covers(knots)]
    if len(keep) < ens.n:
        logger.warning("dropping %d runs whose traces do not span the knots", ens.n - len(keep))
    values = np.array([spline_interp(ens.traces[i], knots) for i in keep])
    return np.array(keep, dtype=int), values.reshape(len(keep), np.size(knots))


def extract_qoi(ens: RunEnsemble, t_star: float, g: float | None = None):
    """Inputs on [0, 1]^d and the output of each run at time ``t_star``.

    Runs whose traces end before ``t_star`` are excluded. With a grounding
    value ``g``, outputs within the grounding tolerance of ``g`` (or below it)
    are set exactly to ``g``.
    """
    if t_star < 0:
        raise IngestError("t_star must be nonnegative")
    keep, vals = interpolate_to_knots(ens, [t_star])
    if keep.size == 0:
        raise IngestError(f"no run covers t = {t_star}")
    y = vals[:, 0]
    if g is not None:
        below = y < g - GROUND_TOL
        if below.any():
            logger.warning("%d outputs fall below g beyond tolerance; clamping to g", int(below.sum()))
        y = np.where(y <= g + GROUND_TOL, g, y)
    return ens.inputs[keep], y


def write_dataset(X, y, path) -> Path:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*(f"x{j + 1}" for j in range(X.shape[1])), "y"])
        for row, val in zip(X, y):
            w.writerow([*(repr(float(v)) for v in row), repr(float(val))])
    return path


def read_dataset(path):
    """Read an ``x1..xd,y`` CSV; the ``y`` column is optional."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    header = [h.strip() for h in rows[0]]
    xcols = [h for h in header if h.startswith("x")]
    if xcols != [f"x{j + 1}" for j in range(len(xcols))] or not xcols:
        raise IngestError(f"{path}: expected columns x1..xd, got {header}")
    body = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, len(header))
    X = body[:, [header.index(c) for c in xcols]]
    y = body[:, header.index("y")] if "y" in header else None
    return X, y
