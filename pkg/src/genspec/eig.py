"""Generalized symmetric eigensolvers for the pencil A x = lambda L x.

Dense path: L = R^T R (Cholesky), C = R^-T A R^-1, Householder reduction of C
to tridiagonal form, implicit-shift QL on the tridiagonal matrix, optional
back-transformation of the eigenvectors.  Iterative path: LOBPCG with an
inexact L^-1 (CG) preconditioner for a few extreme eigenpairs.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .linalg import SparseMatrix, cg_solve, cholesky_dense, solve_lower, solve_upper, spmm

try:  # the QL sweep is scalar code; numba makes it ~100x faster
    from numba import njit as _njit

    _jit = _njit(cache=True)
except ImportError:  # pragma: no cover
    def _jit(fn):
        return fn

DENSE_CAP = 4000
_EPS = np.finfo(float).eps


class EigenSolverError(RuntimeError):
    pass


@dataclass
class EigenResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None
    residuals: np.ndarray | None = None
    method: str = "dense"
    seed: int | None = None
    iterations: int = 0
    converged: bool = True
    timings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "method": self.method,
            "seed": self.seed,
            "iterations": self.iterations,
            "converged": self.converged,
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "residuals": None if self.residuals is None else [float(v) for v in self.residuals],
            "timings": dict(self.timings),
        }
        return out


def _as_dense(M) -> np.ndarray:
    if isinstance(M, SparseMatrix):
        return M.to_dense()
    return np.array(M, dtype=np.float64)


def _matmul(M, X):
    if isinstance(M, SparseMatrix):
        return spmm(M, X)
    return np.asarray(M) @ X


def pencil_residuals(A, L, values, vectors) -> np.ndarray:
    """||A x - lambda L x||_2 / ||L x||_2 for every column x."""
    AX = _matmul(A, vectors)
    LX = _matmul(L, vectors)
    num = np.linalg.norm(AX - LX * values[None, :], axis=0)
    den = np.linalg.norm(LX, axis=0)
    return num / den


def householder_tridiagonalize(C):
    """Reduce symmetric C to tridiagonal T = Q^T C Q.

    Returns (diag, offdiag, reflectors); reflector k is a unit vector v acting
    on rows k+1: as I - 2 v v^T (None when the column was already reduced).
    """
    C = np.array(C, dtype=np.float64)
    n = C.shape[0]
    reflectors = []
    for k in range(n - 2):
        x = C[k + 1:, k]
        tail = np.linalg.norm(x[1:])
        if tail == 0.0:
            reflectors.append(None)
            continue
        xnorm = math.hypot(x[0], tail)
        alpha = -math.copysign(xnorm, x[0])
        v = x.copy()
        v[0] -= alpha
        v /= np.linalg.norm(v)
        S = C[k + 1:, k + 1:]
        p = S @ v
        w = p - (v @ p) * v
        S -= np.outer(2.0 * v, w)
        S -= np.outer(w, 2.0 * v)
        C[k + 1, k] = C[k, k + 1] = alpha
        C[k + 2:, k] = 0.0
        C[k, k + 2:] = 0.0
        reflectors.append(v)
    diag = np.diag(C).copy()
    off = np.diag(C, -1).copy()
    return diag, off, reflectors


def apply_reflectors(reflectors, Z) -> np.ndarray:
    """Q Z with Q = H_0 H_1 ... H_{n-3}."""
    Z = np.array(Z, dtype=np.float64)
    for k in range(len(reflectors) - 1, -1, -1):
        v = reflectors[k]
        if v is None:
            continue
        block = Z[k + 1:]
        block -= np.outer(2.0 * v, v @ block)
    return Z


@_jit
def _tql_kernel(d, e, Z, want_vectors, max_sweeps, eps):
    """Implicit-shift QL on the tridiagonal (d, e); e[i] couples i and i+1.

    Rotations are accumulated into the rows of Z (Z^T holds the eigenvectors).
    Returns the number of sweeps, or -1 when the sweep budget is exhausted.
    """
    n = d.shape[0]
    sweeps = 0
    for l in range(n):
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            if sweeps >= max_sweeps:
                return -1
            sweeps += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if want_vectors:
                    for k in range(Z.shape[1]):
                        f = Z[i + 1, k]
                        Z[i + 1, k] = s * Z[i, k] + c * f
                        Z[i, k] = c * Z[i, k] - s * f
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return sweeps


def tridiagonal_ql(diag, off, want_vectors=False):
    """Eigen-decomposition of a symmetric tridiagonal matrix.

    Returns (values, vectors) with vectors as columns (None unless
    requested); values are in QL output order, not sorted.
    """
    n = len(diag)
    d = np.array(diag, dtype=np.float64)
    e = np.zeros(n)
    e[: n - 1] = off
    ZT = np.eye(n) if want_vectors else np.zeros((1, 1))
    sweeps = _tql_kernel(d, e, ZT, want_vectors, 30 * n, _EPS)
    if sweeps < 0:
        raise EigenSolverError(f"QL iteration did not converge within {30 * n} sweeps")
    return d, (ZT.T.copy() if want_vectors else None)


def symmetric_eig(C, want_vectors=True):
    """Ascending eigenpairs of a small dense symmetric matrix."""
    C = np.asarray(C, dtype=np.float64)
    C = 0.5 * (C + C.T)
    n = C.shape[0]
    if n == 1:
        return C[0].copy(), np.ones((1, 1))
    diag, off, refl = householder_tridiagonalize(C)
    vals, Z = tridiagonal_ql(diag, off, want_vectors)
    order = np.argsort(vals, kind="stable")
    vals = vals[order]
    if not want_vectors:
        return vals, None
    return vals, apply_reflectors(refl, Z[:, order])


def dense_generalized_eig(A, L, want_vectors: bool = False, dense_cap: int = DENSE_CAP) -> EigenResult:
    """All eigenvalues of A x = lambda L x (A, L symmetric, L SPD), ascending."""
    t0 = time.perf_counter()
    n = A.shape[0]
    if L.shape[0] != n:
        raise ValueError("A and L have different orders")
    if n > dense_cap:
        raise EigenSolverError(f"order {n} exceeds the dense cap {dense_cap}")
    Ad = _as_dense(A)
    Ld = _as_dense(L)
    R = cholesky_dense(Ld)
    Y = solve_lower(R.T, Ad)            # R^-T A
    C = solve_lower(R.T, Y.T)           # R^-T A R^-1 (A symmetric)
    C = 0.5 * (C + C.T)
    t1 = time.perf_counter()
    diag, off, refl = householder_tridiagonalize(C)
    t2 = time.perf_counter()
    vals, Z = tridiagonal_ql(diag, off, want_vectors)
    order = np.argsort(vals, kind="stable")
    vals = vals[order]
    t3 = time.perf_counter()
    vecs = res = None
    if want_vectors:
        Z = apply_reflectors(refl, Z[:, order])
        vecs = solve_upper(R, Z)
        LX = _matmul(L, vecs)
        vecs /= np.sqrt(np.einsum("ij,ij->j", vecs, LX))[None, :]
        res = pencil_residuals(A, L, vals, vecs)
    t4 = time.perf_counter()
    return EigenResult(
        eigenvalues=vals,
        eigenvectors=vecs,
        residuals=res,
        method="dense",
        timings={
            "reduce_s": t1 - t0,
            "tridiagonalize_s": t2 - t1,
            "ql_s": t3 - t2,
            "vectors_s": t4 - t3,
        },
    )


def rayleigh_quotient(A, L, v) -> float:
    v = np.asarray(v, dtype=np.float64)
    if not np.any(v):
        raise ValueError("Rayleigh quotient of the zero vector")
    num = float(v @ _matmul(A, v[:, None])[:, 0])
    den = float(v @ _matmul(L, v[:, None])[:, 0])
    return num / den


def _l_orthonormalize(S, LS, drop_tol=1e-12):
    """SVQB: L-orthonormal basis of span(S), dropping near-dependent directions."""
    G = S.T @ LS
    G = 0.5 * (G + G.T)
    scale = np.sqrt(np.abs(np.diag(G)))
    scale[scale == 0] = 1.0
    Gs = G / np.outer(scale, scale)
    w, V = symmetric_eig(Gs)
    keep = w > drop_tol * max(w.max(), 1.0)
    T = (V[:, keep] / np.sqrt(w[keep])[None, :]) / scale[:, None]
    return S @ T, LS @ T


def lobpcg(
    A: SparseMatrix,
    L: SparseMatrix,
    block: int,
    which: str = "smallest",
    tol: float = 1e-8,
    max_iter: int = 500,
    seed: int = 0,
    prec_tol: float = 1e-6,
    guard: int | None = None,
) -> EigenResult:
    """``block`` extreme eigenpairs of A x = lambda L x.

    The preconditioner is L^-1 applied inexactly by CG (relative tolerance
    ``prec_tol``).  A few guard vectors beyond ``block`` are iterated to keep
    clustered eigenvalues from stalling convergence; only the first ``block``
    pairs must meet ``tol``.  On non-convergence the best iterate is returned
    with ``converged=False``.
    """
    if which not in ("smallest", "largest"):
        raise ValueError("which must be 'smallest' or 'largest'")
    n = A.shape[0]
    if block < 1 or block > n:
        raise ValueError(f"block must be in [1, {n}], got {block}")
    t0 = time.perf_counter()
    if guard is None:
        guard = min(max(2, block // 2), n - block)
    m = block + guard
    # fewer than three blocks of vectors: the Rayleigh-Ritz space is everything
    if 3 * m >= n:
        res = dense_generalized_eig(A, L, want_vectors=True)
        sel = slice(0, block) if which == "smallest" else slice(n - block, n)
        return EigenResult(
            res.eigenvalues[sel].copy(), res.eigenvectors[:, sel].copy(), res.residuals[sel].copy(),
            method=f"lobpcg-{which}", seed=seed, iterations=0, converged=True,
            timings={"total_s": time.perf_counter() - t0},
        )

    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, m))

    def pick(vals):
        idx = np.arange(m) if which == "smallest" else np.arange(len(vals) - m, len(vals))
        return idx

    def precondition(R):
        return np.column_stack([cg_solve(L, R[:, j], rel_tol=prec_tol).x for j in range(R.shape[1])])

    LX = spmm(L, X)
    X, LX = _l_orthonormalize(X, LX)
    AX = spmm(A, X)
    theta, Y = symmetric_eig(X.T @ AX)
    idx = pick(theta)
    X, LX, AX, theta = X @ Y[:, idx], LX @ Y[:, idx], AX @ Y[:, idx], theta[idx]
    P = LP = AP = None
    it = 0
    converged = False
    while True:
        R = AX - LX * theta[None, :]
        resid = np.linalg.norm(R, axis=0) / np.linalg.norm(LX, axis=0)
        target = slice(0, block) if which == "smallest" else slice(m - block, m)
        if np.all(resid[target] <= tol):
            converged = True
            break
        if it >= max_iter:
            break
        it += 1
        W = precondition(R)
        parts = [X, W] if P is None else [X, W, P]
        S = np.hstack(parts)
        LS = spmm(L, S)
        S, LS = _l_orthonormalize(S, LS)
        AS = spmm(A, S)
        H = S.T @ AS
        vals, Y = symmetric_eig(H)
        idx = pick(vals)
        Yk = Y[:, idx]
        Xn, LXn, AXn = S @ Yk, LS @ Yk, AS @ Yk
        # search direction: new iterate with the old-X component removed
        C = X.T @ LXn
        P, LP, AP = Xn - X @ C, LXn - LX @ C, AXn - AX @ C
        X, LX, AX, theta = Xn, LXn, AXn, vals[idx]

    sel = slice(0, block) if which == "smallest" else slice(m - block, m)
    vals = theta[sel].copy()
    vecs = X[:, sel].copy()
    vecs /= np.sqrt(np.einsum("ij,ij->j", vecs, spmm(L, vecs)))[None, :]
    res = pencil_residuals(A, L, vals, vecs)
    return EigenResult(
        vals, vecs, res, method=f"lobpcg-{which}", seed=seed, iterations=it, converged=converged,
        timings={"total_s": time.perf_counter() - t0},
    )
