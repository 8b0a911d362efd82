"""Sparse/dense kernels: CSR matrices, conjugate gradients, dense Cholesky.

All scalars are float64.  Kernels are deterministic: rows are accumulated
in ascending column order and nothing depends on thread scheduling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_CG_TOL = 1e-10


class NotPositiveDefiniteError(ValueError):
    pass


class CGNotConverged(RuntimeError):
    def __init__(self, iterations: int, residual: float):
        super().__init__(f"CG did not converge in {iterations} iterations (relative residual {residual:.3e})")
        self.iterations = iterations
        self.residual = residual


class SparseMatrix:
    """Square matrix in CSR layout with sorted, duplicate-free column indices."""

    def __init__(self, n, row_ptr, col_idx, values, check=True):
        self.n = int(n)
        self.row_ptr = np.ascontiguousarray(row_ptr, dtype=np.int64)
        self.col_idx = np.ascontiguousarray(col_idx, dtype=np.int64)
        self.values = np.ascontiguousarray(values, dtype=np.float64)
        if check:
            self._validate()
        self._row_of = None

    def _validate(self):
        n, rp, ci = self.n, self.row_ptr, self.col_idx
        if rp.shape != (n + 1,) or rp[0] != 0 or rp[-1] != ci.size or ci.size != self.values.size:
            raise ValueError("inconsistent CSR arrays")
        if np.any(np.diff(rp) < 0):
            raise ValueError("row_ptr must be non-decreasing")
        if ci.size and (ci.min() < 0 or ci.max() >= n):
            raise ValueError("column index out of range")
        if ci.size > 1:
            step = np.diff(ci)
            # positions where a new row starts are exempt from the ordering check
            starts = np.zeros(ci.size - 1, dtype=bool)
            inner = rp[1:-1]
            starts[inner[(inner > 0) & (inner < ci.size)] - 1] = True
            if np.any((step <= 0) & ~starts):
                raise ValueError("column indices must be strictly increasing within each row")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite matrix entry")

    @property
    def shape(self):
        return (self.n, self.n)

    @property
    def nnz(self) -> int:
        return int(self.values.size)

    @property
    def row_indices(self) -> np.ndarray:
        if self._row_of is None:
            self._row_of = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.row_ptr))
        return self._row_of

    @classmethod
    def from_coo(cls, n, rows, cols, vals) -> "SparseMatrix":
        """Sum duplicates in the order they are given (stable), then pack as CSR."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size:
            new = np.ones(rows.size, dtype=bool)
            new[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            starts = np.flatnonzero(new)
            vals = np.add.reduceat(vals, starts)
            rows, cols = rows[starts], cols[starts]
        row_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=row_ptr[1:])
        return cls(n, row_ptr, cols, vals)

    @classmethod
    def from_dense(cls, M, drop_zeros=True) -> "SparseMatrix":
        M = np.asarray(M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("dense matrix must be square")
        mask = M != 0 if drop_zeros else np.ones(M.shape, dtype=bool)
        rows, cols = np.nonzero(mask)
        return cls.from_coo(M.shape[0], rows, cols, M[rows, cols])

    @classmethod
    def identity(cls, n) -> "SparseMatrix":
        idx = np.arange(n)
        return cls(n, np.arange(n + 1), idx, np.ones(n))

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        out[self.row_indices, self.col_idx] = self.values
        return out

    def diagonal(self) -> np.ndarray:
        diag = np.zeros(self.n)
        mask = self.row_indices == self.col_idx
        diag[self.row_indices[mask]] = self.values[mask]
        return diag

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix.from_coo(self.n, self.col_idx, self.row_indices, self.values)

    def is_symmetric(self, exact=True, rtol=0.0) -> bool:
        t = self.transpose()
        if not (np.array_equal(t.row_ptr, self.row_ptr) and np.array_equal(t.col_idx, self.col_idx)):
            return False
        if exact:
            return bool(np.array_equal(t.values, self.values))
        scale = np.abs(self.values).max(initial=0.0)
        return bool(np.all(np.abs(t.values - self.values) <= rtol * scale))

    def same_pattern(self, other: "SparseMatrix") -> bool:
        return (
            self.n == other.n
            and np.array_equal(self.row_ptr, other.row_ptr)
            and np.array_equal(self.col_idx, other.col_idx)
        )

    def scaled(self, alpha: float) -> "SparseMatrix":
        return SparseMatrix(self.n, self.row_ptr, self.col_idx, alpha * self.values, check=False)

    def axpby(self, alpha: float, other: "SparseMatrix", beta: float) -> "SparseMatrix":
        """alpha*self + beta*other."""
        if self.same_pattern(other):
            return SparseMatrix(
                self.n, self.row_ptr, self.col_idx, alpha * self.values + beta * other.values, check=False
            )
        if self.n != other.n:
            raise ValueError("dimension mismatch")
        return SparseMatrix.from_coo(
            self.n,
            np.concatenate([self.row_indices, other.row_indices]),
            np.concatenate([self.col_idx, other.col_idx]),
            np.concatenate([alpha * self.values, beta * other.values]),
        )

    def matvec(self, x) -> np.ndarray:
        return spmv(self, x)

    def __matmul__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return spmv(self, x)
        return spmm(self, x)

    def __repr__(self):
        return f"SparseMatrix(n={self.n}, nnz={self.nnz})"


def spmv(M: SparseMatrix, x) -> np.ndarray:
    """y = M x, each row summed over ascending column index."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (M.n,):
        raise ValueError(f"dimension mismatch: matrix order {M.n}, vector shape {x.shape}")
    y = np.zeros(M.n)
    if M.nnz == 0:
        return y
    prod = M.values * x[M.col_idx]
    counts = np.diff(M.row_ptr)
    nonempty = counts > 0
    y[nonempty] = np.add.reduceat(prod, M.row_ptr[:-1][nonempty])
    return y


def spmm(M: SparseMatrix, X) -> np.ndarray:
    """Y = M X for a dense block X, same accumulation order as ``spmv``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != M.n:
        raise ValueError(f"dimension mismatch: matrix order {M.n}, block shape {X.shape}")
    Y = np.zeros(X.shape)
    if M.nnz == 0 or X.shape[1] == 0:
        return Y
    prod = M.values[:, None] * X[M.col_idx]
    nonempty = np.diff(M.row_ptr) > 0
    Y[nonempty] = np.add.reduceat(prod, M.row_ptr[:-1][nonempty], axis=0)
    return Y


def write_coordinate(M: SparseMatrix, path) -> None:
    """Plain-text export: one ``i j value`` line per stored entry, 1-based."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"% order {M.n} nnz {M.nnz}\n")
        for i, j, v in zip(M.row_indices + 1, M.col_idx + 1, M.values):
            fh.write(f"{int(i)} {int(j)} {float(v)!r}\n")


def read_coordinate(path) -> SparseMatrix:
    n = None
    rows, cols, vals = [], [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("%"):
                parts = line.split()
                if "order" in parts:
                    n = int(parts[parts.index("order") + 1])
                continue
            i, j, v = line.split()
            rows.append(int(i) - 1)
            cols.append(int(j) - 1)
            vals.append(float(v))
    if n is None:
        n = max(max(rows), max(cols)) + 1
    return SparseMatrix.from_coo(n, rows, cols, vals)


@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    residual: float


def cg_solve(
    M: SparseMatrix,
    b,
    rel_tol: float = DEFAULT_CG_TOL,
    max_iter: int | None = None,
    preconditioner: str = "none",
    x0=None,
) -> CGResult:
    """Preconditioned conjugate gradients for SPD ``M``.

    Stops when the true residual satisfies ||Mx - b|| <= rel_tol ||b||; the
    recursive residual only triggers the check.  Raises
    ``NotPositiveDefiniteError`` on non-positive curvature and
    ``CGNotConverged`` after ``max_iter`` iterations.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (M.n,):
        raise ValueError(f"dimension mismatch: matrix order {M.n}, rhs shape {b.shape}")
    if not np.all(np.isfinite(b)):
        raise ValueError("right-hand side is not finite")
    if max_iter is None:
        max_iter = max(10 * M.n, 100)
    if preconditioner == "jacobi":
        diag = M.diagonal()
        if np.any(diag <= 0):
            raise NotPositiveDefiniteError("non-positive diagonal entry; matrix is not SPD")
        inv_diag = 1.0 / diag
        apply_prec = lambda r: inv_diag * r  # noqa: E731
    elif preconditioner == "none":
        apply_prec = lambda r: r  # noqa: E731
    else:
        raise ValueError(f"unknown preconditioner {preconditioner!r}")

    bnorm = float(np.linalg.norm(b))
    x = np.zeros(M.n) if x0 is None else np.array(x0, dtype=np.float64)
    if bnorm == 0.0:
        return CGResult(np.zeros(M.n), 0, 0.0)
    target = rel_tol * bnorm
    r = b - spmv(M, x)
    it = 0
    while True:
        rnorm = float(np.linalg.norm(r))
        if rnorm <= target:
            return CGResult(x, it, rnorm / bnorm)
        z = apply_prec(r)
        p = z.copy()
        rz = float(r @ z)
        while it < max_iter:
            q = spmv(M, p)
            curv = float(p @ q)
            if not curv > 0.0:
                raise NotPositiveDefiniteError(f"non-positive curvature {curv:.3e} at CG iteration {it}")
            alpha = rz / curv
            x += alpha * p
            r -= alpha * q
            it += 1
            if np.linalg.norm(r) <= target:
                break
            z = apply_prec(r)
            rz_new = float(r @ z)
            p = z + (rz_new / rz) * p
            rz = rz_new
        # confirm with the true residual; restart from it if recursion drifted
        r = b - spmv(M, x)
        if it >= max_iter and np.linalg.norm(r) > target:
            raise CGNotConverged(it, float(np.linalg.norm(r)) / bnorm)


def l_inner(L: SparseMatrix, u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != (L.n,) or v.shape != (L.n,):
        raise ValueError("dimension mismatch")
    return float(u @ spmv(L, v))


def l_norm(L: SparseMatrix, u) -> float:
    return math.sqrt(max(l_inner(L, u, u), 0.0))


def cholesky_dense(M) -> np.ndarray:
    """Upper-triangular R with M = R^T R (row-oriented, one gemv per row)."""
    M = np.asarray(M, dtype=np.float64)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError("matrix must be square")
    R = np.zeros((n, n))
    for j in range(n):
        s = M[j, j:] - R[:j, j] @ R[:j, j:]
        if not s[0] > 0.0:
            raise NotPositiveDefiniteError(f"matrix is not positive definite (pivot {j} = {s[0]:.3e})")
        rjj = math.sqrt(s[0])
        R[j, j] = rjj
        R[j, j + 1:] = s[1:] / rjj
    return R


def solve_lower(Lo, B) -> np.ndarray:
    """Forward substitution for lower-triangular ``Lo``; B may hold several columns."""
    Lo = np.asarray(Lo, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    X = np.array(B, copy=True)
    for i in range(Lo.shape[0]):
        if i:
            X[i] -= Lo[i, :i] @ X[:i]
        X[i] /= Lo[i, i]
    return X


def solve_upper(U, B) -> np.ndarray:
    """Back substitution for upper-triangular ``U``."""
    U = np.asarray(U, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    X = np.array(B, copy=True)
    n = U.shape[0]
    for i in range(n - 1, -1, -1):
        if i < n - 1:
            X[i] -= U[i, i + 1:] @ X[i + 1:]
        X[i] /= U[i, i]
    return X

