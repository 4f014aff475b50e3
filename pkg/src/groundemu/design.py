"""Latin hypercube designs and maximin selection."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DEFAULT_CANDIDATES = 30


@dataclass(frozen=True, eq=False)
class Design:
    X: np.ndarray
    seed: int | None = None

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def lhd(n: int, d: int, rng=None) -> Design:
    """Random Latin hypercube on [0, 1]^d.

    Each column is a random permutation of the strata 0..n-1 jittered
    uniformly within its stratum, so ``floor(n * X[:, j])`` is always a
    permutation of ``range(n)``.
    """
    if n < 1 or d < 1:
        raise ValueError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    seed = rng if isinstance(rng, (int, np.integer)) else None
    gen = _as_rng(rng)
    strata = np.column_stack([gen.permutation(n) for _ in range(d)])
    X = (strata + gen.random((n, d))) / n
    # rounding in (k + u) / n can cross a stratum edge; step back inside
    for _ in range(4):
        k = np.floor(X * n)
        if np.array_equal(k, strata):
            break
        X = np.where(k > strata, np.nextafter(X, -np.inf), X)
        X = np.where(k < strata, np.nextafter(X, np.inf), X)
    return Design(X, seed)


def min_pairwise_dist(X) -> float:
    X = np.atleast_2d(np.asarray(getattr(X, "X", X), dtype=float))
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least two points")
    best = np.inf
    for i in range(n - 1):
        diff = X[i + 1:] - X[i]
        best = min(best, float(np.sqrt(np.min(np.einsum("ij,ij->i", diff, diff)))))
    return best


def maximin_select(designs) -> Design:
    """Candidate with the largest minimum inter-point distance (first wins ties)."""
    designs = list(designs)
    if not designs:
        raise ValueError("no candidate designs supplied")
    scores = [min_pairwise_dist(dz) for dz in designs]
    return designs[int(np.argmax(scores))]


def maximin_lhd(n: int, d: int, rng=None, n_candidates: int = DEFAULT_CANDIDATES) -> Design:
    """Best of ``n_candidates`` random LHDs by the maximin criterion."""
    gen = _as_rng(rng)
    candidates = [lhd(n, d, gen) for _ in range(n_candidates)]
    if n < 2:
        return candidates[0]
    return maximin_select(candidates)


def write_design_csv(design, path) -> Path:
    X = np.atleast_2d(np.asarray(getattr(design, "X", design), dtype=float))
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{j + 1}" for j in range(X.shape[1])])
        for row in X:
            w.writerow([repr(float(v)) for v in row])
    return path


def read_design_csv(path) -> np.ndarray:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    expected = [f"x{j + 1}" for j in range(len(header))]
    if header != expected:
        raise ValueError(f"{path}: expected header {expected}, got {header}")
    return np.array([[float(v) for v in r] for r in body], dtype=float).reshape(-1, len(header))
