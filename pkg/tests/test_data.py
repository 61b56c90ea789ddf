import numpy as np
import pytest

from maxmachine.binmat import BinaryMatrix
from maxmachine.data import (TripletDataset, load_triplets, per_type_subsample, read_key_value_csv, read_pairs,
                             write_triplets)
from maxmachine.errors import ConfigError, DataError
from maxmachine.hierarchy import UNKNOWN_TYPE


def write(path, text):
    path.write_text(text)
    return path


def test_counts(tmp_path):
    data = load_triplets(write(tmp_path / "p.csv", "p1,size\np1,color\np2,size\n"))
    assert data.shape == (2, 2) and len(data.pairs) == 3
    assert data.object_ids == ["p1", "p2"] and data.attribute_ids == ["size", "color"]
    assert data.to_matrix().to_dense().tolist() == [[1, 1], [1, 0]]


def test_duplicates_dropped(tmp_path):
    data = load_triplets(write(tmp_path / "p.csv", "p1,size\np1,size\np2,size\n"))
    assert len(data.pairs) == 2 and data.n_duplicates == 1


def test_missing_type_is_unknown(tmp_path):
    pairs = write(tmp_path / "p.csv", "p1,size\np2,size\n")
    types = write(tmp_path / "t.csv", "p1,shirt\np3,hat\n")
    data = load_triplets(pairs, types)
    assert data.type_of == ["shirt", UNKNOWN_TYPE, "hat"]
    # type-only objects become empty rows
    assert data.n_objects == 3 and data.to_matrix().row(2).sum() == 0


def test_malformed_row_reports_line(tmp_path):
    with pytest.raises(DataError) as err:
        load_triplets(write(tmp_path / "p.csv", "p1,size\n\np2\n"))
    assert err.value.line == 3


def test_empty_pairs(tmp_path):
    with pytest.raises(DataError):
        load_triplets(write(tmp_path / "p.csv", "\n"))


def test_min_attr_freq(tmp_path):
    data = load_triplets(write(tmp_path / "p.csv", "a,x\nb,x\nc,x\nd,x\na,y\n"), min_attr_freq=0.5)
    assert data.attribute_ids == ["x"] and data.n_objects == 4


def test_write_roundtrip(tmp_path):
    X = BinaryMatrix.from_dense(np.random.default_rng(0).random((6, 4)) < 0.5)
    X.set(0, 0, 1)
    data = TripletDataset.from_matrix(X, ["a", "b", "a", "b", "a", "b"])
    write_triplets(data, tmp_path / "p.csv", tmp_path / "t.csv")
    back = load_triplets(tmp_path / "p.csv", tmp_path / "t.csv")
    for i, o in enumerate(back.object_ids):
        src = data.object_ids.index(o)
        assert back.type_of[i] == data.type_of[src]
        for j, a in enumerate(back.attribute_ids):
            assert back.to_matrix()[i, j] == X[src, data.attribute_ids.index(a)]


def test_key_value_and_pairs(tmp_path):
    path = write(tmp_path / "c.csv", "p1,men\np2,women\n")
    assert read_key_value_csv(path) == {"p1": "men", "p2": "women"}
    assert read_pairs(path) == [("p1", "men"), ("p2", "women")]


class TestSubsample:
    def data(self, sizes):
        labels = [t for t, k in sizes.items() for _ in range(k)]
        X = BinaryMatrix.from_dense(np.random.default_rng(1).random((len(labels), 3)) < 0.5)
        return TripletDataset.from_matrix(X, labels)

    def test_large_cap_keeps_everything(self):
        d = self.data({"a": 5, "b": 3})
        s = per_type_subsample(d, 10)
        assert sorted(s.object_ids) == sorted(d.object_ids) and len(s.pairs) == len(d.pairs)

    def test_cap(self):
        s = per_type_subsample(self.data({"a": 1000}), 500, seed=3)
        assert s.n_objects == 500
        assert s.pairs[:, 0].max() < 500

    def test_deterministic(self):
        d = self.data({"a": 50, "b": 40})
        assert per_type_subsample(d, 10, seed=2).object_ids == per_type_subsample(d, 10, seed=2).object_ids

    def test_bad_cap(self):
        with pytest.raises(ConfigError):
            per_type_subsample(self.data({"a": 2}), 0)
