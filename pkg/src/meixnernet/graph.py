"""Sparse graph representation and normalized Laplacian operators.

The symmetric normalized Laplacian L = I - D^{-1/2} A D^{-1/2} is stored in
CSR form; the two rescalings used by the filters (0.5 * L for the Meixner
branch, 2L/lambda_max - I for the Chebyshev baseline) keep its structure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


@dataclass
class CsrMatrix:
    """Immutable CSR matrix; column indices strictly increasing within rows."""

    rows: int
    cols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    vals: np.ndarray
    _handle: sp.csr_matrix = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.row_ptr = np.asarray(self.row_ptr, dtype=np.int64)
        self.col_idx = np.asarray(self.col_idx, dtype=np.int64)
        self.vals = np.asarray(self.vals, dtype=np.float64)
        self.validate()

    def validate(self):
        nnz = len(self.vals)
        if len(self.row_ptr) != self.rows + 1:
            raise ValueError("row_ptr length must be rows + 1")
        if self.row_ptr[0] != 0 or self.row_ptr[-1] != nnz or len(self.col_idx) != nnz:
            raise ValueError("row_ptr endpoints must bracket nnz entries")
        if np.any(np.diff(self.row_ptr) < 0):
            raise ValueError("row_ptr must be non-decreasing")
        if nnz and (self.col_idx.min() < 0 or self.col_idx.max() >= self.cols):
            raise ValueError("column index out of range")
        # strictly increasing within each row: diffs may only be <= 0 at row starts
        if nnz > 1:
            flat = np.diff(self.col_idx) <= 0
            starts = np.zeros(nnz - 1, dtype=bool)
            inner = self.row_ptr[1:-1]
            starts[inner[(inner > 0) & (inner < nnz)] - 1] = True
            if np.any(flat & ~starts):
                raise ValueError("column indices must be strictly increasing within each row")

    @property
    def nnz(self) -> int:
        return len(self.vals)

    def _scipy(self) -> sp.csr_matrix:
        if self._handle is None:
            self._handle = sp.csr_matrix((self.vals, self.col_idx, self.row_ptr),
                                         shape=(self.rows, self.cols))
        return self._handle

    def matmat(self, dense: np.ndarray) -> np.ndarray:
        """self @ dense, returning a dense float64 array."""
        out = self._scipy() @ dense
        return np.asarray(out, dtype=np.float64)

    def densify(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols))
        for i in range(self.rows):
            lo, hi = self.row_ptr[i], self.row_ptr[i + 1]
            out[i, self.col_idx[lo:hi]] = self.vals[lo:hi]
        return out

    @classmethod
    def from_coo(cls, rows: int, cols: int, i, j, v) -> "CsrMatrix":
        """Build from unordered (i, j, v) triples; duplicates are not summed."""
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        v = np.asarray(v, dtype=np.float64)
        order = np.lexsort((j, i))
        i, j, v = i[order], j[order], v[order]
        row_ptr = np.zeros(rows + 1, dtype=np.int64)
        np.add.at(row_ptr, i + 1, 1)
        np.cumsum(row_ptr, out=row_ptr)
        return cls(rows, cols, row_ptr, j, v)

    @classmethod
    def from_dense(cls, a: np.ndarray) -> "CsrMatrix":
        a = np.asarray(a, dtype=np.float64)
        i, j = np.nonzero(a)
        return cls.from_coo(a.shape[0], a.shape[1], i, j, a[i, j])


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph: canonical (u < v) deduplicated edge pairs."""

    num_nodes: int
    edges: np.ndarray  # (m, 2) int64

    @classmethod
    def from_edge_list(cls, num_nodes: int, pairs) -> "Graph":
        """Symmetrize, deduplicate, and drop self-loops."""
        if num_nodes < 1:
            raise ValueError("graph needs at least one node")
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        if len(pairs):
            if pairs.min() < 0 or pairs.max() >= num_nodes:
                raise ValueError(f"edge endpoint out of range [0, {num_nodes})")
            lo = np.minimum(pairs[:, 0], pairs[:, 1])
            hi = np.maximum(pairs[:, 0], pairs[:, 1])
            keep = lo != hi  # self-loops dropped before Laplacian construction
            pairs = np.unique(np.column_stack([lo[keep], hi[keep]]), axis=0)
        return cls(num_nodes, pairs)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.num_nodes, dtype=np.int64)
        if len(self.edges):
            np.add.at(deg, self.edges[:, 0], 1)
            np.add.at(deg, self.edges[:, 1], 1)
        return deg


def sym_normalized_laplacian(g: Graph) -> CsrMatrix:
    """L = I - D^{-1/2} A D^{-1/2}; isolated nodes get L_ii = 1, no off-diagonals.

    Symmetric with eigenvalues in [0, 2].
    """
    deg = g.degrees().astype(np.float64)
    inv_sqrt = np.zeros_like(deg)
    nz = deg > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])

    u, v = (g.edges[:, 0], g.edges[:, 1]) if len(g.edges) else (np.empty(0, np.int64),) * 2
    w = -inv_sqrt[u] * inv_sqrt[v]
    i = np.concatenate([u, v, np.arange(g.num_nodes, dtype=np.int64)])
    j = np.concatenate([v, u, np.arange(g.num_nodes, dtype=np.int64)])
    vals = np.concatenate([w, w, np.ones(g.num_nodes)])
    return CsrMatrix.from_coo(g.num_nodes, g.num_nodes, i, j, vals)


def scale_laplacian(l: CsrMatrix, factor: float) -> CsrMatrix:
    """Multiply all entries by factor (0.5 maps the spectrum [0,2] -> [0,1])."""
    if factor <= 0:
        raise ValueError(f"scale factor must be positive, got {factor}")
    return CsrMatrix(l.rows, l.cols, l.row_ptr.copy(), l.col_idx.copy(), l.vals * factor)


def chebyshev_rescale(l: CsrMatrix, lambda_max: float) -> CsrMatrix:
    """2 L / lambda_max - I, diagonal entries kept materialized."""
    if lambda_max <= 0:
        raise ValueError(f"lambda_max must be positive, got {lambda_max}")
    if l.rows != l.cols:
        raise ValueError("chebyshev_rescale expects a square matrix")
    vals = l.vals * (2.0 / lambda_max)
    row_ptr, col_idx = l.row_ptr.copy(), l.col_idx.copy()
    rows_of = np.repeat(np.arange(l.rows), np.diff(l.row_ptr))
    diag = rows_of == col_idx
    have = set(rows_of[diag].tolist())
    missing = [r for r in range(l.rows) if r not in have]
    if missing:
        i = np.concatenate([rows_of, np.asarray(missing, dtype=np.int64)])
        j = np.concatenate([col_idx, np.asarray(missing, dtype=np.int64)])
        v = np.concatenate([vals, np.zeros(len(missing))])
        out = CsrMatrix.from_coo(l.rows, l.cols, i, j, v)
        vals, row_ptr, col_idx = out.vals, out.row_ptr, out.col_idx
        rows_of = np.repeat(np.arange(l.rows), np.diff(row_ptr))
        diag = rows_of == col_idx
    vals = vals.copy()
    vals[diag] -= 1.0
    return CsrMatrix(l.rows, l.cols, row_ptr, col_idx, vals)
