"""Saving and loading trained models as ``.npz`` archives.

Posterior means of U, Z and V, per-sample reliabilities, dictionaries and
dimension statistics are always stored. The packed samples themselves are
optional because they dominate the file size.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .binmat import BinaryMatrix
from .errors import DataError, StateError, UnsupportedVersionError
from .model import Sample, dimension_stats

log = logging.getLogger(__name__)

FORMAT_VERSION = 1


@dataclass
class ModelArtifact:
    config: dict
    U_mean: np.ndarray  # L x D
    Z_mean: np.ndarray  # N x L
    V_mean: np.ndarray | None  # T x L, None without a type layer
    reliabilities: np.ndarray  # S x (L + 1)
    object_ids: list
    attribute_ids: list
    type_names: list = field(default_factory=list)
    type_of: np.ndarray | None = None
    nu: np.ndarray | None = None
    lambda_hat: np.ndarray | None = None
    samples: list | None = None  # list of Sample, bottom layer
    X_words: np.ndarray | None = None  # packed training matrix
    clamps: list = field(default_factory=list)  # (clamp_u, clamp_z) BinaryMatrix pair per layer
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        L, D = self.U_mean.shape
        N = self.Z_mean.shape[0]
        if self.Z_mean.shape[1] != L or self.reliabilities.shape[1] != L + 1:
            raise DataError("artifact matrices disagree on the number of dimensions")
        if len(self.object_ids) != N or len(self.attribute_ids) != D:
            raise DataError("artifact dictionaries disagree with matrix shapes")

    @property
    def shape(self) -> tuple[int, int]:
        return self.Z_mean.shape[0], self.U_mean.shape[1]

    @property
    def L(self) -> int:
        return self.U_mean.shape[0]

    def dataset(self):
        """The training data as a :class:`TripletDataset`."""
        from .data import TripletDataset

        if self.X_words is None:
            raise StateError("artifact does not hold its training data")
        if self.type_of is not None:
            labels = [self.type_names[t] for t in self.type_of]
        else:
            labels = None
        X = BinaryMatrix(*self.shape, self.X_words)
        return TripletDataset.from_matrix(X, labels, self.object_ids, self.attribute_ids)

    def predictive_samples(self) -> list:
        """Samples for prediction; without stored samples, one built from thresholded means."""
        if self.samples:
            return self.samples
        warnings.warn("artifact has no retained samples; predicting from posterior-mean parameters",
                      stacklevel=2)
        return [Sample(BinaryMatrix.from_dense(self.U_mean > 0.5), BinaryMatrix.from_dense(self.Z_mean > 0.5),
                       self.reliabilities.mean(axis=0))]


def from_trace(model, trace, X: BinaryMatrix, config: dict, object_ids, attribute_ids,
               type_names=(), mask=None, keep_samples: bool = False) -> ModelArtifact:
    """Summarize a fitted :class:`HierarchicalModel` and its trace."""
    samples = trace.samples
    if not samples:
        raise StateError("posterior trace holds no samples")
    U = np.mean([s.U.to_dense() for s in samples], axis=0)
    Z = np.mean([s.Z.to_dense() for s in samples], axis=0)
    V = None
    if trace.upper_samples:
        V = np.mean([s.U.to_dense() for s in trace.upper_samples], axis=0)
    stats = dimension_stats(trace, X, mask)
    types = getattr(model, "types", None)
    # normalize to what JSON preserves (tuples become lists) so save/load is lossless
    config = json.loads(json.dumps(config, default=str))
    return ModelArtifact(
        config=config, U_mean=U, Z_mean=Z, V_mean=V,
        reliabilities=np.array([s.reliabilities for s in samples]),
        object_ids=list(object_ids), attribute_ids=list(attribute_ids),
        type_names=list(type_names) if type_names else (list(types.names) if types else []),
        type_of=None if types is None else np.asarray(types.type_of),
        nu=stats.nu, lambda_hat=stats.lambda_hat,
        samples=list(samples) if keep_samples else None, X_words=X.words.copy(),
        clamps=[(l.clamp_u.copy(), l.clamp_z.copy()) for l in getattr(model, "layers", [])])


def save_model(artifact: ModelArtifact, path) -> None:
    meta = {
        "format_version": artifact.format_version,
        "config": artifact.config,
        "object_ids": artifact.object_ids,
        "attribute_ids": artifact.attribute_ids,
        "type_names": artifact.type_names,
        "has_samples": bool(artifact.samples),
        "clamp_shapes": [[list(cu.shape), list(cz.shape)] for cu, cz in artifact.clamps],
    }
    arrays = {
        "meta": np.array(json.dumps(meta, sort_keys=True, default=str)),
        "U_mean": artifact.U_mean,
        "Z_mean": artifact.Z_mean,
        "reliabilities": artifact.reliabilities,
    }
    for name in ("V_mean", "type_of", "nu", "lambda_hat", "X_words"):
        value = getattr(artifact, name)
        if value is not None:
            arrays[name] = np.asarray(value)
    for k, (cu, cz) in enumerate(artifact.clamps):
        arrays[f"clamp_u_{k}"] = cu.words
        arrays[f"clamp_z_{k}"] = cz.words
    if artifact.samples:
        arrays["sample_U"] = np.stack([s.U.words for s in artifact.samples])
        arrays["sample_Z"] = np.stack([s.Z.words for s in artifact.samples])
    with open(path, "wb") as fh:
        np.savez_compressed(fh, **arrays)


def load_model(path) -> ModelArtifact:
    """Read an artifact written by :func:`save_model`; nothing partial is ever returned."""
    try:
        with np.load(path, allow_pickle=False) as npz:
            arrays = {k: npz[k] for k in npz.files}
        meta = json.loads(str(arrays.pop("meta")))
    except FileNotFoundError:
        raise
    except Exception as exc:  # truncated zip members surface as several exception types
        raise DataError(f"cannot read model artifact {path}: {exc}") from None
    version = meta.get("format_version")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"artifact format version {version!r}, expected {FORMAT_VERSION}")
    try:
        U, Z, rel = arrays["U_mean"], arrays["Z_mean"], arrays["reliabilities"]
        samples = None
        if meta["has_samples"]:
            L, D = U.shape
            N = Z.shape[0]
            samples = [Sample(BinaryMatrix(L, D, u), BinaryMatrix(N, L, z), r)
                       for u, z, r in zip(arrays["sample_U"], arrays["sample_Z"], rel)]
        clamps = [(BinaryMatrix(*su, arrays[f"clamp_u_{k}"]), BinaryMatrix(*sz, arrays[f"clamp_z_{k}"]))
                  for k, (su, sz) in enumerate(meta.get("clamp_shapes", []))]
        return ModelArtifact(
            config=meta["config"], U_mean=U, Z_mean=Z, V_mean=arrays.get("V_mean"),
            reliabilities=rel, object_ids=meta["object_ids"], attribute_ids=meta["attribute_ids"],
            type_names=meta["type_names"], type_of=arrays.get("type_of"), nu=arrays.get("nu"),
            lambda_hat=arrays.get("lambda_hat"), samples=samples, X_words=arrays.get("X_words"),
            clamps=clamps, format_version=version)
    except KeyError as exc:
        raise DataError(f"model artifact {path} lacks {exc}") from None
