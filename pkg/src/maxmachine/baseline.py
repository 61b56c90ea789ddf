"""Product-type attribute frequency baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .binmat import BinaryMatrix
from .errors import ConfigError
from .model import observed_words


@dataclass(frozen=True)
class TypeFrequencyTable:
    """Observed-one and observed-cell counts per (type, attribute).

    Predictions are ``(count + smoothing) / (total + 2 * smoothing)``.
    """

    counts: np.ndarray  # T x D
    totals: np.ndarray  # T x D
    smoothing: float
    type_of: np.ndarray  # type index per object
    names: tuple

    @property
    def global_counts(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def global_totals(self) -> np.ndarray:
        return self.totals.sum(axis=0)

    def _ratio(self, c, t):
        b = self.smoothing
        with np.errstate(invalid="ignore", divide="ignore"):
            p = (c + b) / (t + 2 * b)
        return np.where(t + 2 * b > 0, p, 0.0)

    def table(self) -> np.ndarray:
        """``T x D`` matrix of predicted probabilities."""
        return self._ratio(self.counts, self.totals)

    def predict_type(self, type_label, d: int) -> float:
        """Prediction for a type label; unseen labels fall back to the global frequency."""
        if type_label in self.names:
            t = self.names.index(type_label)
            return float(self._ratio(self.counts[t, d], self.totals[t, d]))
        return float(self._ratio(self.global_counts[d], self.global_totals[d]))

    def predict_cells(self, cells) -> np.ndarray:
        cells = np.asarray(cells, dtype=np.int64).reshape(-1, 2)
        return self.table()[self.type_of[cells[:, 0]], cells[:, 1]]


def fit(X: BinaryMatrix, type_of, names=None, mask=None, smoothing: float = 0.5) -> TypeFrequencyTable:
    """Tabulate type-wise frequencies over the cells not held out by ``mask``.

    ``type_of`` gives a type index per object (e.g. ``TypeClamp.type_of``).
    """
    if smoothing < 0:
        raise ConfigError("smoothing must be nonnegative")
    type_of = np.asarray(type_of, dtype=np.int64)
    if len(type_of) != X.rows:
        raise ConfigError(f"{len(type_of)} type labels for {X.rows} objects")
    T = int(type_of.max()) + 1 if len(type_of) else 0
    if names is not None:
        T = max(T, len(names))
    names = tuple(names) if names is not None else tuple(range(T))
    obs = BinaryMatrix(X.rows, X.cols, observed_words(mask, X.rows, X.cols)).to_dense().astype(np.int64)
    x = X.to_dense().astype(np.int64) * obs
    counts = np.zeros((T, X.cols), dtype=np.int64)
    totals = np.zeros((T, X.cols), dtype=np.int64)
    np.add.at(counts, type_of, x)
    np.add.at(totals, type_of, obs)
    return TypeFrequencyTable(counts, totals, float(smoothing), type_of, names)


def fit_dataset(data, mask=None, smoothing: float = 0.5) -> TypeFrequencyTable:
    types = data.types()
    return fit(data.to_matrix(), types.type_of, types.names, mask, smoothing)


def predict(table: TypeFrequencyTable, n: int, d: int) -> float:
    t = table.type_of[n]
    return float(table._ratio(table.counts[t, d], table.totals[t, d]))
