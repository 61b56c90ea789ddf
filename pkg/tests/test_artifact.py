import numpy as np
import pytest

from maxmachine.artifact import ModelArtifact, from_trace, load_model, save_model
from maxmachine.binmat import BinaryMatrix
from maxmachine.config import RunConfig
from maxmachine.errors import DataError, StateError, UnsupportedVersionError
from maxmachine.hierarchy import TypeClamp, clamp, fit
from maxmachine.model import posterior_predictive
from maxmachine.sampler import GibbsConfig


@pytest.fixture(scope="module")
def trained():
    rng = np.random.default_rng(0)
    X = BinaryMatrix.from_dense(rng.random((12, 6)) < 0.4)
    types = TypeClamp(np.arange(12) % 3, ["a", "b", "c"])
    model, trace = fit(X, 2, types, config=GibbsConfig(max_sweeps=30, burn_in=5, n_samples=4, seed=1),
                       prepare=lambda m: clamp(m, 0, "U", [(0, 1)], 1))
    return model, trace, X


def artifact(trained, keep=True):
    model, trace, X = trained
    return from_trace(model, trace, X, RunConfig().echo(), [f"o{i}" for i in range(12)],
                      [f"a{j}" for j in range(6)], keep_samples=keep)


def test_roundtrip(trained, tmp_path):
    art = artifact(trained)
    save_model(art, tmp_path / "m.npz")
    back = load_model(tmp_path / "m.npz")
    for name in ("U_mean", "Z_mean", "V_mean", "reliabilities", "type_of", "nu", "lambda_hat", "X_words"):
        np.testing.assert_array_equal(getattr(back, name), getattr(art, name))
    assert back.object_ids == art.object_ids and back.attribute_ids == art.attribute_ids
    assert back.type_names == ["a", "b", "c"] and back.config == art.config
    assert len(back.samples) == 4
    assert all(a.U == b.U and a.Z == b.Z for a, b in zip(art.samples, back.samples))
    np.testing.assert_array_equal(posterior_predictive(back.samples), posterior_predictive(art.samples))


def test_clamps_survive(trained, tmp_path):
    save_model(artifact(trained), tmp_path / "m.npz")
    back = load_model(tmp_path / "m.npz")
    assert len(back.clamps) == 2
    assert back.clamps[0][0].get(0, 1) == 1
    assert back.clamps[1][1] == BinaryMatrix.ones(12, 3)


def test_dataset_roundtrip(trained, tmp_path):
    save_model(artifact(trained), tmp_path / "m.npz")
    data = load_model(tmp_path / "m.npz").dataset()
    assert data.to_matrix() == trained[2]
    assert data.type_of[:3] == ["a", "b", "c"]


def test_truncated(trained, tmp_path):
    path = tmp_path / "m.npz"
    save_model(artifact(trained), path)
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) // 2])
    with pytest.raises(DataError):
        load_model(path)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_model(tmp_path / "nope.npz")


def test_version_mismatch(trained, tmp_path):
    art = artifact(trained)
    art.format_version = 99
    save_model(art, tmp_path / "m.npz")
    with pytest.raises(UnsupportedVersionError):
        load_model(tmp_path / "m.npz")


def test_fallback_without_samples(trained, tmp_path):
    save_model(artifact(trained, keep=False), tmp_path / "m.npz")
    back = load_model(tmp_path / "m.npz")
    assert back.samples is None
    with pytest.warns(UserWarning, match="posterior-mean"):
        samples = back.predictive_samples()
    assert len(samples) == 1
    p = posterior_predictive(samples)
    assert ((p > 0) & (p < 1)).all()


def test_shape_checks(trained):
    art = artifact(trained)
    with pytest.raises(DataError):
        ModelArtifact(art.config, art.U_mean, art.Z_mean, None, art.reliabilities, art.object_ids[:-1],
                      art.attribute_ids)
    with pytest.raises(DataError):
        ModelArtifact(art.config, art.U_mean, art.Z_mean, None, art.reliabilities[:, :-1], art.object_ids,
                      art.attribute_ids)


def test_empty_trace(trained):
    from maxmachine.sampler import PosteriorTrace

    model, _, X = trained
    with pytest.raises(StateError):
        from_trace(model, PosteriorTrace(), X, {}, [], [])
