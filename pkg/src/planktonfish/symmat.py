"""Small dense symmetric linear algebra for certificate checks.

Self-contained Jacobi eigensolver, Cholesky-style positive-definiteness
test, and inverse square root, for matrices up to 9x9.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError

MAX_DIM = 9
_PD_TOL = 1e-13  # pivot tolerance, relative to the Frobenius norm


class SymMatrix:
    """Symmetric matrix with symmetry exact by construction."""

    def __init__(self, upper: np.ndarray):
        upper = np.asarray(upper, dtype=float)
        n = upper.shape[0]
        if upper.shape != (n, n) or n > MAX_DIM:
            raise DomainError(f"expected square matrix of dimension <= {MAX_DIM}")
        # mirror the upper triangle so both halves are bitwise identical
        a = np.triu(upper)
        self._a = a + np.triu(a, 1).T
        self.n = n

    @classmethod
    def from_array(cls, a) -> "SymMatrix":
        return cls(np.asarray(a, dtype=float))

    def array(self) -> np.ndarray:
        return self._a.copy()

    def __getitem__(self, idx):
        return self._a[idx]

    def norm(self) -> float:
        return float(np.linalg.norm(self._a))


def _as_sym_array(M) -> np.ndarray:
    if isinstance(M, SymMatrix):
        return M.array()
    return SymMatrix.from_array(M).array()


def sym_eigen(M, sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthogonal eigenvectors, cyclic Jacobi.

    Terminates when the off-diagonal Frobenius norm drops below
    1e-12 * ||M||; raises if that takes more than ``sweeps`` sweeps.
    """
    a = _as_sym_array(M)
    n = a.shape[0]
    v = np.eye(n)
    norm = np.linalg.norm(a)
    if norm == 0.0:
        return np.zeros(n), v
    for _ in range(sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2) * 2.0)
        if off <= 1e-12 * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot
    else:
        raise RuntimeError("Jacobi eigensolver failed to converge")
    order = np.argsort(np.diag(a))
    return np.diag(a)[order].copy(), v[:, order]


def is_positive_definite(M) -> tuple[bool, float]:
    """(PD flag, smallest eigenvalue).

    The flag comes from an unpivoted Cholesky attempt with all pivots
    required to exceed 1e-13 * ||M||; the eigenvalue is from
    :func:`sym_eigen` for reporting.
    """
    a = _as_sym_array(M)
    n = a.shape[0]
    tol = _PD_TOL * max(np.linalg.norm(a), 1e-300)
    pd = True
    work = a.copy()
    for k in range(n):
        pivot = work[k, k]
        if pivot <= tol:
            pd = False
            break
        lk = work[k + 1:, k] / pivot
        work[k + 1:, k + 1:] -= np.outer(lk, work[k, k + 1:])
    eigvals, _ = sym_eigen(a)
    return pd, float(eigvals[0])


def inv_sqrt(M) -> SymMatrix:
    """M^{-1/2} via eigendecomposition; requires M positive definite."""
    a = _as_sym_array(M)
    pd, min_eig = is_positive_definite(a)
    if not pd:
        raise DomainError(f"inv_sqrt requires a positive definite matrix "
                          f"(min eigenvalue {min_eig:g})")
    eigvals, vecs = sym_eigen(a)
    root = vecs @ np.diag(1.0 / np.sqrt(eigvals)) @ vecs.T
    # numerical symmetrization before wrapping
    return SymMatrix.from_array(0.5 * (root + root.T))
