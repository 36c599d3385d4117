"""Sparse symmetric linear algebra.

SparseSym is the one matrix container used throughout: CSR with sorted
columns, both triangles stored, 64-bit floats. Adjacency matrices, their
normalized forms, Laplacians and density matrices all live here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import NumericalError


@dataclass(frozen=True)
class SparseSym:
    """Structurally symmetric CSR matrix (both triangles stored)."""

    n: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    @property
    def nnz(self) -> int:
        return int(self.col_idx.shape[0])

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.values, self.col_idx, self.row_ptr), shape=(self.n, self.n)
        )

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def scaled(self, factor: float) -> "SparseSym":
        return SparseSym(self.n, self.row_ptr, self.col_idx, self.values * factor)

    def diagonal(self) -> np.ndarray:
        return self.to_scipy().diagonal()

    @classmethod
    def from_scipy(cls, m: sp.spmatrix, check: bool = True) -> "SparseSym":
        m = sp.csr_matrix(m, dtype=np.float64)
        if m.shape[0] != m.shape[1]:
            raise ValueError(f"matrix must be square, got {m.shape}")
        m.sum_duplicates()
        m.sort_indices()
        m.eliminate_zeros()
        if check and (m != m.T).nnz != 0:
            raise ValueError("matrix is not symmetric")
        return cls(
            m.shape[0],
            m.indptr.astype(np.int64),
            m.indices.astype(np.int64),
            m.data.astype(np.float64),
        )

    @classmethod
    def from_pairs(
        cls, n: int, rows: np.ndarray, cols: np.ndarray, vals: np.ndarray
    ) -> "SparseSym":
        """Build from unordered pairs given once per (i, j) with i <= j.

        Off-diagonal entries are mirrored, so (i,j) and (j,i) share the exact
        same float — symmetry holds bit-for-bit by construction.
        """
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        off = rows != cols
        r = np.concatenate([rows, cols[off]])
        c = np.concatenate([cols, rows[off]])
        v = np.concatenate([vals, vals[off]])
        m = sp.csr_matrix((v, (r, c)), shape=(n, n))
        return cls.from_scipy(m, check=False)


def renormalize_adjacency(a: SparseSym) -> SparseSym:
    """Self-loop-augmented symmetric normalization of an adjacency matrix.

    Returns S (A + I) S with S = diag(degree + 1)^(-1/2). Isolated nodes get
    a diagonal entry of exactly 1.
    """
    m = a.to_scipy()
    deg = np.asarray(m.sum(axis=1)).ravel()
    s = 1.0 / np.sqrt(deg + 1.0)
    coo = (m + sp.identity(a.n, format="csr")).tocoo()
    upper = coo.row <= coo.col
    rows, cols = coo.row[upper], coo.col[upper]
    vals = s[rows] * coo.data[upper] * s[cols]
    return SparseSym.from_pairs(a.n, rows, cols, vals)


def laplacian_of(a_tilde: SparseSym) -> tuple[SparseSym, float]:
    """Laplacian I - A of a normalized adjacency, along with its trace.

    Raises NumericalError when the trace is not positive (the density matrix
    would be undefined).
    """
    m = sp.identity(a_tilde.n, format="csr") - a_tilde.to_scipy()
    lap = SparseSym.from_scipy(m, check=False)
    trace = float(lap.diagonal().sum())
    if trace <= 0.0:
        raise NumericalError(f"Laplacian trace {trace} is not positive")
    return lap, trace


def density_of(a_tilde: SparseSym) -> tuple[SparseSym, float]:
    """Trace-normalized Laplacian of a normalized adjacency.

    Returns (rho, trace) with rho = (I - A) / trace.
    """
    lap, trace = laplacian_of(a_tilde)
    return lap.scaled(1.0 / trace), trace


def spmm(m: SparseSym, x: np.ndarray) -> np.ndarray:
    """Sparse-dense product M @ X with a fixed summation order."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != m.n:
        raise ValueError(f"dimension mismatch: {m.n} vs {x.shape[0]}")
    return m.to_scipy() @ x


def sparsity(m: SparseSym) -> float:
    """Fill fraction nnz / n^2."""
    return m.nnz / float(m.n) ** 2
