import itertools

import numpy as np
import pytest

from groundemu.design import (
    Design,
    lhd,
    maximin_lhd,
    maximin_select,
    min_pairwise_dist,
    read_design_csv,
    write_design_csv,
)


def stratified(X):
    n = X.shape[0]
    return all(sorted(np.floor(n * X[:, j]).astype(int)) == list(range(n)) for j in range(X.shape[1]))


def test_lhd_stratified_many_sizes():
    rng = np.random.default_rng(0)
    for n, d in itertools.product([1, 2, 3, 7, 10, 49, 100], [1, 2, 5]):
        for _ in range(5):
            X = lhd(n, d, rng).X
            assert X.shape == (n, d)
            assert np.all((X >= 0) & (X < 1))
            assert stratified(X)


def test_lhd_seeded():
    assert np.array_equal(lhd(10, 3, 4).X, lhd(10, 3, 4).X)
    assert not np.array_equal(lhd(10, 3, 4).X, lhd(10, 3, 5).X)
    with pytest.raises(ValueError):
        lhd(0, 2)


def test_min_pairwise_dist():
    X = np.array([[0.0, 0.0], [3.0, 4.0], [0.0, 1.0]])
    assert min_pairwise_dist(X) == 1.0
    assert min_pairwise_dist(Design(X)) == 1.0
    with pytest.raises(ValueError):
        min_pairwise_dist([[0.1, 0.2]])


def test_maximin_select_cases():
    one = lhd(5, 2, 0)
    assert maximin_select([one]) is one
    good = Design(np.array([[0.1, 0.1], [0.9, 0.9], [0.1, 0.9]]))
    dup = Design(np.array([[0.1, 0.1], [0.1, 0.1], [0.9, 0.9]]))
    assert maximin_select([dup, good]) is good
    assert maximin_select([good, dup]) is good
    with pytest.raises(ValueError):
        maximin_select([])


def test_maximin_exhaustive_and_permutation_covariant():
    rng = np.random.default_rng(1)
    cands = [lhd(20, 2, rng) for _ in range(30)]
    scores = [min_pairwise_dist(c) for c in cands]
    best = maximin_select(cands)
    assert all(min_pairwise_dist(best) >= s for s in scores)
    perm = rng.permutation(30)
    assert min_pairwise_dist(maximin_select([cands[i] for i in perm])) == max(scores)


def test_maximin_lhd_is_stratified_and_seeded():
    a = maximin_lhd(15, 3, 7)
    assert stratified(a.X)
    assert np.array_equal(a.X, maximin_lhd(15, 3, 7).X)


def test_csv_round_trip(tmp_path):
    X = lhd(8, 3, 2).X
    path = write_design_csv(X, tmp_path / "d.csv")
    assert path.read_text().splitlines()[0] == "x1,x2,x3"
    assert np.array_equal(read_design_csv(path), X)
    (tmp_path / "bad.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_design_csv(tmp_path / "bad.csv")
