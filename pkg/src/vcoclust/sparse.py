"""Compressed sparse row matrices for adjacency and feature data.

Only the operations the encoders need are provided: construction from
coordinate lists, dense conversion, transposition, row slicing and the
sparse-dense product used by the graph convolution. Values are float64
and instances are immutable once built.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError, ContractError


class CsrMatrix:
    """Sparse rows x cols matrix in CSR layout.

    Column indices are strictly increasing within each row and the offset
    array is monotone with ``offsets[-1] == nnz``; ``validate`` enforces
    this after construction.
    """

    __slots__ = ("rows", "cols", "offsets", "indices", "values", "_transpose")

    def __init__(self, rows, cols, offsets, indices, values):
        self.rows = int(rows)
        self.cols = int(cols)
        self.offsets = np.ascontiguousarray(offsets, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.values = np.ascontiguousarray(values, dtype=np.float64)
        self._transpose = None
        self.validate()

    @property
    def nnz(self):
        return int(self.offsets[-1])

    def validate(self):
        if self.offsets.shape != (self.rows + 1,):
            raise ContractError("offset array must have rows+1 entries")
        if self.offsets[0] != 0 or np.any(np.diff(self.offsets) < 0):
            raise ContractError("offsets must be monotone and start at 0")
        if self.offsets[-1] != len(self.indices) or len(self.indices) != len(self.values):
            raise ContractError("nnz mismatch between offsets, indices and values")
        if len(self.indices) and (self.indices.min() < 0 or self.indices.max() >= self.cols):
            raise ContractError("column index out of range")
        for r in range(self.rows):
            lo, hi = self.offsets[r], self.offsets[r + 1]
            if hi - lo > 1 and np.any(np.diff(self.indices[lo:hi]) <= 0):
                raise ContractError(f"column indices not strictly increasing in row {r}")

    @classmethod
    def from_coo(cls, rows, cols, row_ids, col_ids, values=None):
        """Build from coordinate lists; duplicate coordinates are summed."""
        row_ids = np.asarray(row_ids, dtype=np.int64)
        col_ids = np.asarray(col_ids, dtype=np.int64)
        if values is None:
            values = np.ones(len(row_ids), dtype=np.float64)
        else:
            values = np.asarray(values, dtype=np.float64)
        if len(row_ids):
            if row_ids.min() < 0 or row_ids.max() >= rows:
                raise ShapeError("row index out of range")
            if col_ids.min() < 0 or col_ids.max() >= cols:
                raise ShapeError("column index out of range")
        # sort by (row, col), then merge duplicates
        order = np.lexsort((col_ids, row_ids))
        row_ids, col_ids, values = row_ids[order], col_ids[order], values[order]
        if len(row_ids):
            keep = np.ones(len(row_ids), dtype=bool)
            keep[1:] = (row_ids[1:] != row_ids[:-1]) | (col_ids[1:] != col_ids[:-1])
            group = np.cumsum(keep) - 1
            merged = np.zeros(int(group[-1]) + 1, dtype=np.float64)
            np.add.at(merged, group, values)
            row_ids, col_ids, values = row_ids[keep], col_ids[keep], merged
        offsets = np.zeros(rows + 1, dtype=np.int64)
        np.add.at(offsets, row_ids + 1, 1)
        offsets = np.cumsum(offsets)
        return cls(rows, cols, offsets, col_ids, values)

    @classmethod
    def identity(cls, n):
        return cls(n, n, np.arange(n + 1), np.arange(n), np.ones(n))

    @classmethod
    def from_dense(cls, dense):
        dense = np.asarray(dense, dtype=np.float64)
        rr, cc = np.nonzero(dense)
        return cls.from_coo(dense.shape[0], dense.shape[1], rr, cc, dense[rr, cc])

    def densify(self):
        out = np.zeros((self.rows, self.cols))
        row_ids = np.repeat(np.arange(self.rows), np.diff(self.offsets))
        out[row_ids, self.indices] = self.values
        return out

    def densify_rows(self, start, stop):
        """Dense view of rows ``start:stop`` without materializing the rest."""
        lo, hi = self.offsets[start], self.offsets[stop]
        out = np.zeros((stop - start, self.cols))
        row_ids = np.repeat(
            np.arange(stop - start), np.diff(self.offsets[start:stop + 1])
        )
        out[row_ids, self.indices[lo:hi]] = self.values[lo:hi]
        return out

    def transpose(self):
        """Transposed copy; cached because spmm backward reuses it."""
        if self._transpose is None:
            row_ids = np.repeat(np.arange(self.rows), np.diff(self.offsets))
            self._transpose = CsrMatrix.from_coo(
                self.cols, self.rows, self.indices, row_ids, self.values
            )
        return self._transpose

    def row_sums(self):
        out = np.zeros(self.rows)
        np.add.at(out, np.repeat(np.arange(self.rows), np.diff(self.offsets)), self.values)
        return out

    def scale_rows_cols(self, row_scale, col_scale):
        """New matrix with entry (i, j) multiplied by row_scale[i] * col_scale[j]."""
        row_ids = np.repeat(np.arange(self.rows), np.diff(self.offsets))
        vals = self.values * row_scale[row_ids] * col_scale[self.indices]
        return CsrMatrix(self.rows, self.cols, self.offsets.copy(), self.indices.copy(), vals)

    def matmul_dense(self, b):
        """Product with a dense matrix, summed in fixed row order."""
        b = np.asarray(b, dtype=np.float64)
        if self.cols != b.shape[0]:
            raise ShapeError(
                f"sparse-dense shape mismatch: {self.rows}x{self.cols} @ {b.shape}"
            )
        out = np.zeros((self.rows, b.shape[1]))
        if self.nnz == 0:
            return out
        contrib = self.values[:, None] * b[self.indices, :]
        counts = np.diff(self.offsets)
        nonempty = np.flatnonzero(counts)
        # reduceat over the starts of non-empty rows covers each row's nnz run
        sums = np.add.reduceat(contrib, self.offsets[nonempty], axis=0)
        out[nonempty] = sums
        return out

    def is_symmetric(self, tol=0.0):
        t = self.transpose()
        return (
            np.array_equal(self.offsets, t.offsets)
            and np.array_equal(self.indices, t.indices)
            and bool(np.all(np.abs(self.values - t.values) <= tol))
        )

    def __repr__(self):
        return f"CsrMatrix({self.rows}x{self.cols}, nnz={self.nnz})"
