"""Sparse (object, attribute) triplet data with id dictionaries.

Input is two headerless CSV files: ``object_id,attribute_id`` pairs for
applied attributes and ``object_id,type`` labels.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .binmat import BinaryMatrix
from .errors import ConfigError, DataError
from .hierarchy import UNKNOWN_TYPE, TypeClamp

log = logging.getLogger(__name__)


@dataclass
class TripletDataset:
    n_objects: int
    n_attributes: int
    pairs: np.ndarray  # (k, 2) int64, unique
    object_ids: list
    attribute_ids: list
    type_of: list  # type label per object
    n_duplicates: int = 0
    _matrix: BinaryMatrix | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.pairs = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)
        if len(self.object_ids) != self.n_objects or len(self.type_of) != self.n_objects:
            raise DataError("object dictionary and type labels must cover every object")
        if len(self.attribute_ids) != self.n_attributes:
            raise DataError("attribute dictionary size does not match n_attributes")

    @classmethod
    def from_matrix(cls, X: BinaryMatrix, type_of=None, object_ids=None, attribute_ids=None):
        n, d = X.nonzero()
        object_ids = list(object_ids) if object_ids else [f"o{i}" for i in range(X.rows)]
        attribute_ids = list(attribute_ids) if attribute_ids else [f"a{j}" for j in range(X.cols)]
        type_of = list(type_of) if type_of is not None else [UNKNOWN_TYPE] * X.rows
        return cls(X.rows, X.cols, np.column_stack([n, d]), object_ids, attribute_ids, type_of)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_objects, self.n_attributes)

    def to_matrix(self) -> BinaryMatrix:
        if self._matrix is None:
            self._matrix = BinaryMatrix.from_cells(self.n_objects, self.n_attributes, self.pairs)
        return self._matrix

    def types(self) -> TypeClamp:
        return TypeClamp.from_labels(self.type_of)

    def attribute_index(self, attribute_id: str) -> int:
        try:
            return self.attribute_ids.index(attribute_id)
        except ValueError:
            raise KeyError(f"unknown attribute {attribute_id!r}") from None

    def subset_objects(self, keep) -> "TripletDataset":
        """Dataset restricted to the objects in ``keep`` (sorted), indices re-densified."""
        keep = np.sort(np.asarray(keep, dtype=np.int64))
        remap = np.full(self.n_objects, -1, dtype=np.int64)
        remap[keep] = np.arange(len(keep))
        rows = remap[self.pairs[:, 0]] if len(self.pairs) else np.empty(0, np.int64)
        sel = rows >= 0
        pairs = np.column_stack([rows[sel], self.pairs[sel, 1]])
        return TripletDataset(len(keep), self.n_attributes, pairs,
                              [self.object_ids[i] for i in keep], list(self.attribute_ids),
                              [self.type_of[i] for i in keep])

    def subset_attributes(self, keep) -> "TripletDataset":
        keep = np.sort(np.asarray(keep, dtype=np.int64))
        remap = np.full(self.n_attributes, -1, dtype=np.int64)
        remap[keep] = np.arange(len(keep))
        cols = remap[self.pairs[:, 1]] if len(self.pairs) else np.empty(0, np.int64)
        sel = cols >= 0
        pairs = np.column_stack([self.pairs[sel, 0], cols[sel]])
        return TripletDataset(self.n_objects, len(keep), pairs, list(self.object_ids),
                              [self.attribute_ids[j] for j in keep], list(self.type_of))


def _rows(path):
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2 or not row[0].strip() or not row[1].strip():
                raise DataError(f"expected 2 non-empty fields in {path}, got {row!r}", line=lineno)
            yield lineno, row[0].strip(), row[1].strip()


def load_triplets(path_pairs, path_types=None, min_attr_freq: float = 0.0) -> TripletDataset:
    """Read the pair and type files into a :class:`TripletDataset`.

    Objects and attributes are numbered in order of first appearance in the
    pairs file; objects that appear only in the types file follow, as rows
    without applied attributes. Duplicate pairs are dropped and counted.
    """
    obj, att = {}, {}
    pairs, seen = [], set()
    dups = 0
    for _, o, a in _rows(path_pairs):
        i = obj.setdefault(o, len(obj))
        j = att.setdefault(a, len(att))
        if (i, j) in seen:
            dups += 1
            continue
        seen.add((i, j))
        pairs.append((i, j))
    if not pairs:
        raise DataError(f"no pairs in {path_pairs}")
    if dups:
        log.warning("dropped %d duplicate pairs", dups)

    labels = {}
    if path_types is not None:
        for _, o, t in _rows(path_types):
            labels[o] = t
            obj.setdefault(o, len(obj))
    object_ids = list(obj)
    type_of = [labels.get(o, UNKNOWN_TYPE) for o in object_ids]
    data = TripletDataset(len(obj), len(att), np.array(pairs), object_ids, list(att), type_of, dups)
    if min_attr_freq > 0:
        freq = np.bincount(data.pairs[:, 1], minlength=data.n_attributes) / data.n_objects
        data = data.subset_attributes(np.flatnonzero(freq >= min_attr_freq))
        data.n_duplicates = dups
    return data


def write_triplets(data: TripletDataset, path_pairs, path_types=None) -> None:
    with open(path_pairs, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for i, j in data.pairs:
            w.writerow([data.object_ids[i], data.attribute_ids[j]])
    if path_types is not None:
        with open(path_types, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            for o, t in zip(data.object_ids, data.type_of):
                w.writerow([o, t])


def per_type_subsample(data: TripletDataset, cap: int, seed: int = 0) -> TripletDataset:
    """Keep at most ``cap`` objects of each type, chosen uniformly without replacement."""
    if cap < 1:
        raise ConfigError("cap must be at least 1")
    rng = np.random.default_rng(seed)
    groups: dict[str, list[int]] = {}
    for i, t in enumerate(data.type_of):
        groups.setdefault(t, []).append(i)
    keep = []
    for members in groups.values():
        if len(members) > cap:
            members = rng.choice(members, size=cap, replace=False).tolist()
        keep.extend(members)
    return data.subset_objects(keep)


def read_pairs(path) -> list[tuple[str, str]]:
    """Rows of a two-column headerless CSV, in file order."""
    return [(a, b) for _, a, b in _rows(path)]


def read_key_value_csv(path) -> dict:
    """Two-column headerless CSV as a dict (e.g. object -> cluster)."""
    return {k: v for _, k, v in _rows(path)}
