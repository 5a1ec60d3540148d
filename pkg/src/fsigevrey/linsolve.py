"""Direct sparse solves, H-weighted singular values and null spaces."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla


@dataclass(frozen=True)
class Tolerances:
    residual: float = 1e-10
    pivot: float = 1e-14
    nullspace: float = 1e-10
    dense_limit: int = 2000


TOL = Tolerances()


class SingularMatrixError(ArithmeticError):
    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class ConvergenceError(ArithmeticError):
    pass


def _equilibrate(a):
    """Row then column max-norm scaling factors (powers of two, so exact)."""
    r = abs(a).max(axis=1).toarray().ravel()
    r = np.where(r > 0, 2.0 ** -np.round(np.log2(np.where(r > 0, r, 1.0))), 1.0)
    ar = sp.diags(r) @ a
    c = abs(ar).max(axis=0).toarray().ravel()
    c = np.where(c > 0, 2.0 ** -np.round(np.log2(np.where(c > 0, c, 1.0))), 1.0)
    return r, c


class Factorization:
    """Sparse LU of a square matrix, reusable across right-hand sides.

    The matrix is equilibrated before factorization and every solve is
    followed by iterative refinement against the unscaled matrix.
    """

    refinement_steps = 2

    def __init__(self, a):
        a = sp.csc_matrix(a, dtype=float)
        if a.shape[0] != a.shape[1]:
            raise ValueError(f"matrix must be square, got {a.shape}")
        self.matrix = a
        self._r, self._c = _equilibrate(a)
        scaled = (sp.diags(self._r) @ a @ sp.diags(self._c)).tocsc()
        try:
            self._lu = spla.splu(scaled)
        except RuntimeError as exc:
            raise SingularMatrixError(f"LU failed: {exc}", _locate_zero_pivot(a)) from exc
        udiag = np.abs(self._lu.U.diagonal())
        bad = np.nonzero(~(udiag > TOL.pivot))[0]
        if bad.size:
            col = int(self._lu.perm_c[bad[0]])
            raise SingularMatrixError(f"zero pivot at column {col}", col)

    @property
    def shape(self):
        return self.matrix.shape

    def _solve_once(self, b):
        return self._c * self._lu.solve(self._r * b)

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        x = self._solve_once(b)
        for _ in range(self.refinement_steps):
            x = x + self._solve_once(b - self.matrix @ x)
        return x

    def residual(self, x, b):
        return np.linalg.norm(self.matrix @ x - b, np.inf)


def _locate_zero_pivot(a):
    if a.shape[0] > TOL.dense_limit:
        return None
    _, _, u = la.lu(a.toarray())
    d = np.abs(np.diag(u))
    idx = np.nonzero(d <= TOL.pivot * max(d.max(initial=0.0), 1.0))[0]
    return int(idx[0]) if idx.size else None


def lu_solve(a, b):
    """Solve ``a x = b``; ``a`` may be a matrix or an existing :class:`Factorization`."""
    fact = a if isinstance(a, Factorization) else Factorization(a)
    return fact.solve(b)


def _cholesky(h):
    h = np.asarray(h.toarray() if sp.issparse(h) else h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("weight matrix must be square")
    if not np.allclose(h, h.conj().T, rtol=1e-12, atol=1e-14 * np.abs(h).max()):
        raise ValueError("weight matrix is not symmetric")
    try:
        return la.cholesky(h, lower=True)
    except la.LinAlgError as exc:
        raise ValueError("weight matrix is not positive definite") from exc


def h_transform(a, h=None, chol=None):
    """Return ``L^T a L^{-T}`` with ``h = L L^T``; the H-operator norm geometry."""
    a = np.asarray(a.toarray() if sp.issparse(a) else a)
    if h is None and chol is None:
        return a
    L = _cholesky(h) if chol is None else chol
    y = la.solve_triangular(L, a.T, lower=True).T  # a L^{-T}
    return L.T @ y


def smallest_singular_value(a, h=None):
    """min over ||x||_H = 1 of ||a x||_H, with H = ``h`` (identity if None)."""
    b = h_transform(a, h)
    try:
        s = la.svdvals(b)
    except la.LinAlgError as exc:
        raise ConvergenceError(f"SVD did not converge: {exc}") from exc
    return float(s[-1])


def nullspace_basis(c, tol=None):
    """Orthonormal basis Z of the numerical null space of ``c``.

    Singular values at or below ``tol`` count as zero, so ``||c Z||_2 <= tol``.
    """
    if tol is None:
        tol = TOL.nullspace
    if tol <= 0:
        raise ValueError("nullspace tolerance must be positive")
    c = np.atleast_2d(np.asarray(c.toarray() if sp.issparse(c) else c, dtype=float))
    _, s, vh = la.svd(c, full_matrices=True)
    rank = int(np.sum(s > tol))
    return vh[rank:].conj().T
