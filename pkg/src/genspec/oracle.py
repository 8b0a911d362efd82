"""Closed-form spectrum of the Q1 pencil for constant diagonal K.

With constant K the stiffness forms are Kronecker sums of 1D Q1 stiffness
(S) and mass (M) matrices, which share the discrete sine eigenvectors.  The
pencil eigenvalue of mode (p_1, .., p_d) is

    sum_k kappa_k s_{p_k} prod_{j != k} m_{p_j}  /  sum_k s_{p_k} prod_{j != k} m_{p_j}.

Nothing here touches the assembly or eigensolver code paths.
"""
from __future__ import annotations

import itertools

import numpy as np


def q1_1d_matrices(n_cells: int, length: float = 1.0):
    """Interior 1D Q1 stiffness and mass matrices (dense, order n_cells - 1)."""
    h = length / n_cells
    m = n_cells - 1
    S = (2.0 * np.eye(m) - np.eye(m, k=1) - np.eye(m, k=-1)) / h
    M = (4.0 * np.eye(m) + np.eye(m, k=1) + np.eye(m, k=-1)) * (h / 6.0)
    return S, M


def q1_1d_modes(n_cells: int, length: float = 1.0):
    """Eigenvalues (s_j, m_j), j = 1..n-1, of the 1D Q1 matrices.

    Computed numerically as Rayleigh quotients of the sine vectors
    sin(j pi i / n), after checking that those vectors are eigenvectors.
    """
    S, M = q1_1d_matrices(n_cells, length)
    i = np.arange(1, n_cells)
    j = np.arange(1, n_cells)
    V = np.sin(np.pi * np.outer(i, j) / n_cells)
    SV, MV = S @ V, M @ V
    nrm = np.einsum("ij,ij->j", V, V)
    s = np.einsum("ij,ij->j", V, SV) / nrm
    mm = np.einsum("ij,ij->j", V, MV) / nrm
    scale = max(np.abs(S).max(), np.abs(M).max())
    if np.abs(SV - V * s).max() > 1e-12 * scale * n_cells or np.abs(MV - V * mm).max() > 1e-12 * scale * n_cells:
        raise AssertionError("sine vectors are not eigenvectors of the 1D Q1 matrices")
    return s, mm


def q1_1d_modes_closed_form(n_cells: int, length: float = 1.0):
    h = length / n_cells
    c = np.cos(np.pi * np.arange(1, n_cells) / n_cells)
    return (2.0 / h) * (1.0 - c), (h / 3.0) * (2.0 + c)


def tensor_pencil_eigenvalues(kappa, cells, lengths=None) -> np.ndarray:
    """Sorted pencil eigenvalues for K = diag(kappa) on a box with the given cells."""
    kappa = np.asarray(kappa, dtype=float)
    d = len(cells)
    lengths = np.ones(d) if lengths is None else np.asarray(lengths, dtype=float)
    modes = [q1_1d_modes(cells[k], lengths[k]) for k in range(d)]
    num = []
    den = []
    for combo in itertools.product(*[range(cells[k] - 1) for k in range(d)]):
        terms = []
        for k in range(d):
            t = modes[k][0][combo[k]]
            for j in range(d):
                if j != k:
                    t *= modes[j][1][combo[j]]
            terms.append(t)
        terms = np.asarray(terms)
        num.append(float(kappa @ terms))
        den.append(float(terms.sum()))
    return np.sort(np.asarray(num) / np.asarray(den))


def kron_stiffness(kappa, cells, lengths=None) -> np.ndarray:
    """Dense interior stiffness matrix sum_k kappa_k (M x .. x S_k x .. x M).

    Kronecker factors are ordered so that axis 0 varies fastest, matching
    the lexicographic DOF numbering.
    """
    d = len(cells)
    lengths = np.ones(d) if lengths is None else np.asarray(lengths, dtype=float)
    mats = [q1_1d_matrices(cells[k], lengths[k]) for k in range(d)]
    total = None
    for k in range(d):
        term = np.ones((1, 1))
        for j in reversed(range(d)):
            term = np.kron(term, mats[j][0] if j == k else mats[j][1])
        term = kappa[k] * term
        total = term if total is None else total + term
    return total
