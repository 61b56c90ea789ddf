import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maxmachine.baseline import fit, fit_dataset, predict
from maxmachine.binmat import BinaryMatrix
from maxmachine.data import TripletDataset
from maxmachine.errors import ConfigError
from maxmachine.evaluation import make_holdout

from .conftest import FUZZ, bm


def test_smoothed_frequency():
    X = bm([[1], [1], [1], [0]])
    table = fit(X, [0, 0, 0, 0], smoothing=0.5)
    assert predict(table, 0, 0) == pytest.approx((3 + 0.5) / (4 + 1.0))
    assert predict(table, 0, 0) == pytest.approx(0.7)


def test_no_smoothing_zero_count():
    table = fit(bm([[0], [0], [0]]), [0, 0, 0], smoothing=0.0)
    assert predict(table, 1, 0) == 0.0


def test_everything_held_out():
    X = bm([[1, 0], [1, 1]])
    mask = BinaryMatrix.ones(2, 2)
    table = fit(X, [0, 0], mask=mask, smoothing=0.5)
    assert table.table().tolist() == [[0.5, 0.5]]
    assert fit(X, [0, 0], mask=mask, smoothing=0.0).table().tolist() == [[0.0, 0.0]]


def test_held_out_cells_ignored():
    X = bm([[1], [1], [0], [0]])
    mask = bm([[1], [1], [0], [0]])
    assert predict(fit(X, [0] * 4, mask=mask, smoothing=0.0), 0, 0) == 0.0


def test_unknown_type_uses_global_frequency():
    X = BinaryMatrix.from_dense((np.arange(100) < 10).reshape(100, 1))
    table = fit(X, np.arange(100) % 4, names=["a", "b", "c", "d"], smoothing=0.0)
    assert table.predict_type("never-seen", 0) == pytest.approx(0.1)
    assert table.predict_type("a", 0) == pytest.approx(3 / 25)


def test_constant_within_type(rng):
    X = BinaryMatrix.from_dense(rng.random((60, 7)) < 0.3)
    type_of = rng.integers(0, 5, 60)
    table = fit(X, type_of, mask=make_holdout(60, 7, 0.2, seed=1).bits)
    P = np.array([[predict(table, n, d) for d in range(7)] for n in range(60)])
    for t in range(5):
        rows = P[type_of == t]
        assert (rows == rows[0]).all()
    cells = np.argwhere(np.ones((60, 7)))
    np.testing.assert_array_equal(table.predict_cells(cells), P.ravel())


def test_fit_dataset_uses_labels():
    X = bm([[1, 0], [1, 0], [0, 1]])
    table = fit_dataset(TripletDataset.from_matrix(X, ["shoe", "shoe", "hat"]), smoothing=0.0)
    assert table.predict_type("shoe", 0) == 1.0
    assert table.predict_type("hat", 1) == 1.0


def test_validation():
    with pytest.raises(ConfigError):
        fit(bm([[1]]), [0], smoothing=-1)
    with pytest.raises(ConfigError):
        fit(bm([[1], [0]]), [0])


@settings(max_examples=FUZZ)
@given(st.integers(1, 30), st.integers(1, 8), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_unsmoothed_is_empirical_mean(N, D, T, seed):
    rng = np.random.default_rng(seed)
    x = rng.random((N, D)) < rng.random()
    hidden = rng.random((N, D)) < 0.3
    type_of = rng.integers(0, T, N)
    table = fit(BinaryMatrix.from_dense(x), type_of, names=list(range(T)), mask=BinaryMatrix.from_dense(hidden),
                smoothing=0.0)
    for n in range(N):
        for d in range(D):
            seen = (type_of == type_of[n]) & ~hidden[:, d]
            expected = x[seen, d].mean() if seen.any() else 0.0
            assert predict(table, n, d) == expected
            # constant within the type
            assert predict(table, n, d) == predict(table, int(np.flatnonzero(type_of == type_of[n])[0]), d)
