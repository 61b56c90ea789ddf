"""Bit-packed binary matrices.

Rows are packed little-endian into ``uint64`` words: column ``j`` of a row
lives in word ``j // 64`` at bit ``j % 64``. Bits past ``cols`` in the last
word of each row are always zero, so population counts never need masking.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError

WORD_BITS = 64


def n_words(cols: int) -> int:
    return (cols + WORD_BITS - 1) // WORD_BITS


def pack_rows(dense) -> np.ndarray:
    """Pack a 2-d 0/1 array into a ``(rows, n_words)`` uint64 array."""
    dense = np.asarray(dense)
    rows, cols = dense.shape
    width = n_words(cols) * WORD_BITS
    padded = np.zeros((rows, width), dtype=np.uint8)
    padded[:, :cols] = dense != 0
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64, copy=False)


def unpack_rows(words: np.ndarray, cols: int) -> np.ndarray:
    """Inverse of :func:`pack_rows`, returning a ``uint8`` array."""
    rows = words.shape[0]
    if words.shape[1] == 0:
        return np.zeros((rows, cols), dtype=np.uint8)
    as_bytes = np.ascontiguousarray(words, dtype="<u8").view(np.uint8)
    bits = np.unpackbits(as_bytes, axis=1, bitorder="little")
    return bits[:, :cols].copy()


class BinaryMatrix:
    """Dense 0/1 matrix with row-major bit packing.

    Parameters
    ----------
    rows, cols : int
        Logical shape.
    words : ndarray of uint64, optional
        Packed storage of shape ``(rows, n_words(cols))``. Ownership is taken
        without copying. Defaults to all zeros.
    """

    __slots__ = ("rows", "cols", "words")

    def __init__(self, rows: int, cols: int, words: np.ndarray | None = None):
        if rows < 0 or cols < 0:
            raise ShapeError(f"negative shape ({rows}, {cols})")
        self.rows = int(rows)
        self.cols = int(cols)
        expected = (self.rows, n_words(self.cols))
        if words is None:
            words = np.zeros(expected, dtype=np.uint64)
        elif words.shape != expected or words.dtype != np.uint64:
            raise ShapeError(f"word array {words.shape}/{words.dtype} does not fit {expected}")
        self.words = words

    # construction -------------------------------------------------------

    @classmethod
    def from_dense(cls, values, rows: int | None = None, cols: int | None = None) -> "BinaryMatrix":
        arr = np.asarray(values)
        if rows is not None or cols is not None:
            if rows is None or cols is None:
                raise ShapeError("rows and cols must be given together")
            if arr.size != rows * cols:
                raise ShapeError(f"{arr.size} values cannot fill a {rows}x{cols} matrix")
            arr = arr.reshape(rows, cols)
        if arr.ndim != 2:
            raise ShapeError(f"expected a 2-d grid, got {arr.ndim} dimensions")
        if arr.size and not np.isin(arr, (0, 1)).all():
            raise ValueError("entries must be 0 or 1")
        return cls(arr.shape[0], arr.shape[1], pack_rows(arr))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BinaryMatrix":
        return cls(rows, cols)

    @classmethod
    def ones(cls, rows: int, cols: int) -> "BinaryMatrix":
        return cls.from_dense(np.ones((rows, cols), dtype=np.uint8))

    @classmethod
    def from_cells(cls, rows: int, cols: int, cells) -> "BinaryMatrix":
        """Matrix with ones at the given ``(i, j)`` pairs."""
        m = cls(rows, cols)
        cells = np.asarray(cells, dtype=np.int64).reshape(-1, 2)
        if len(cells):
            i, j = cells[:, 0], cells[:, 1]
            if i.min() < 0 or j.min() < 0 or i.max() >= rows or j.max() >= cols:
                raise IndexError("cell index out of range")
            bit = np.left_shift(np.uint64(1), (j % WORD_BITS).astype(np.uint64))
            np.bitwise_or.at(m.words, (i, j // WORD_BITS), bit)
        return m

    def to_dense(self) -> np.ndarray:
        return unpack_rows(self.words, self.cols)

    def copy(self) -> "BinaryMatrix":
        return BinaryMatrix(self.rows, self.cols, self.words.copy())

    # element access -----------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def _check(self, i: int, j: int) -> None:
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(f"index ({i}, {j}) out of range for shape {self.shape}")

    def get(self, i: int, j: int) -> int:
        self._check(i, j)
        return int((int(self.words[i, j >> 6]) >> (j & 63)) & 1)

    def set(self, i: int, j: int, value) -> None:
        self._check(i, j)
        if value not in (0, 1, True, False):
            raise ValueError("entries must be 0 or 1")
        bit = np.uint64(1) << np.uint64(j & 63)
        if value:
            self.words[i, j >> 6] |= bit
        else:
            self.words[i, j >> 6] &= ~bit

    def __getitem__(self, idx) -> int:
        return self.get(*idx)

    def __setitem__(self, idx, value) -> None:
        self.set(idx[0], idx[1], value)

    def row(self, i: int) -> np.ndarray:
        """Row ``i`` as a dense uint8 vector."""
        return unpack_rows(self.words[i : i + 1], self.cols)[0]

    # summaries ----------------------------------------------------------

    def count(self) -> int:
        return int(np.bitwise_count(self.words).sum())

    def row_counts(self) -> np.ndarray:
        return np.bitwise_count(self.words).sum(axis=1, dtype=np.int64)

    def density(self) -> float:
        size = self.rows * self.cols
        return self.count() / size if size else 0.0

    def nonzero(self) -> tuple[np.ndarray, np.ndarray]:
        return np.nonzero(self.to_dense())

    # algebra ------------------------------------------------------------

    def transpose(self) -> "BinaryMatrix":
        return BinaryMatrix.from_dense(self.to_dense().T)

    @property
    def T(self) -> "BinaryMatrix":
        return self.transpose()

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinaryMatrix):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.words, other.words)

    __hash__ = None  # mutable

    def __and__(self, other: "BinaryMatrix") -> "BinaryMatrix":
        self._same_shape(other)
        return BinaryMatrix(self.rows, self.cols, self.words & other.words)

    def __or__(self, other: "BinaryMatrix") -> "BinaryMatrix":
        self._same_shape(other)
        return BinaryMatrix(self.rows, self.cols, self.words | other.words)

    def invert(self) -> "BinaryMatrix":
        """Complement; padding bits stay zero."""
        out = BinaryMatrix(self.rows, self.cols, ~self.words)
        out._clear_padding()
        return out

    def _clear_padding(self) -> None:
        tail = self.cols % WORD_BITS
        if tail and self.words.shape[1]:
            self.words[:, -1] &= np.uint64((1 << tail) - 1)

    def _same_shape(self, other: "BinaryMatrix") -> None:
        if self.shape != other.shape:
            raise ShapeError(f"shape mismatch {self.shape} vs {other.shape}")

    def __repr__(self) -> str:
        return f"BinaryMatrix({self.rows}x{self.cols}, density={self.density():.3f})"


def from_dense(values, rows: int | None = None, cols: int | None = None) -> BinaryMatrix:
    return BinaryMatrix.from_dense(values, rows, cols)


def boolean_or_product(Z: BinaryMatrix, U: BinaryMatrix) -> BinaryMatrix:
    """Boolean matrix product: ``out[n, d] = OR_l (Z[n, l] AND U[l, d])``."""
    if Z.cols != U.rows:
        raise ShapeError(f"inner dimensions differ: {Z.shape} x {U.shape}")
    out = np.zeros((Z.rows, U.words.shape[1]), dtype=np.uint64)
    z = Z.to_dense().astype(bool)
    for l in range(Z.cols):
        rows = z[:, l]
        if rows.any():
            out[rows] |= U.words[l]
    return BinaryMatrix(Z.rows, U.cols, out)
