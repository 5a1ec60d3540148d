import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from fsigevrey.linsolve import (
    Factorization,
    SingularMatrixError,
    h_transform,
    lu_solve,
    nullspace_basis,
    smallest_singular_value,
)


def test_identity_and_small_system():
    b = np.arange(5.0)
    np.testing.assert_array_equal(lu_solve(sp.identity(5), b), b)
    np.testing.assert_allclose(lu_solve(sp.csr_matrix([[2.0, 1.0], [1.0, 2.0]]), [3.0, 3.0]), [1.0, 1.0])


def test_random_well_conditioned():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((50, 50)) + 50 * np.eye(50)
    b = rng.standard_normal(50)
    x = lu_solve(sp.csr_matrix(a), b)
    assert np.linalg.norm(a @ x - b) / np.linalg.norm(b) <= 1e-11


def test_factorization_reused():
    rng = np.random.default_rng(1)
    a = sp.random(40, 40, density=0.2, random_state=2) + 10 * sp.identity(40)
    f = Factorization(a)
    for _ in range(3):
        b = rng.standard_normal(40)
        x = lu_solve(f, b)
        assert f.residual(x, b) <= 1e-12 * np.abs(b).max()


def test_badly_scaled_saddle_point():
    rng = np.random.default_rng(2)
    n, m = 30, 8
    a = rng.standard_normal((n, n))
    a = a @ a.T + n * np.eye(n)
    c = rng.standard_normal((m, n)) * 1e-6
    k = sp.bmat([[sp.csr_matrix(a), sp.csr_matrix(c.T)], [sp.csr_matrix(c), None]])
    b = rng.standard_normal(n + m)
    x = lu_solve(k, b)
    # multipliers are O(1e12) here, so judge by normwise backward error
    kd = k.toarray()
    backward = np.linalg.norm(kd @ x - b) / (np.linalg.norm(kd, 2) * np.linalg.norm(x) + np.linalg.norm(b))
    assert backward <= 1e-15


def test_singular_matrix_reports_pivot():
    a = sp.csr_matrix(np.array([[1.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0, 0.0, 1.0]]))
    with pytest.raises(SingularMatrixError):
        Factorization(a)


def test_non_square_rejected():
    with pytest.raises(ValueError):
        Factorization(sp.csr_matrix(np.ones((2, 3))))


def test_smallest_singular_value_examples():
    assert smallest_singular_value(np.eye(4), np.eye(4)) == pytest.approx(1.0)
    assert smallest_singular_value(np.diag([3.0, 5.0])) == pytest.approx(3.0)


def _random_spd(rng, n):
    q = rng.standard_normal((n, n))
    return q @ q.T + n * np.eye(n)


def test_weighted_singular_value_matches_brute_force():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((30, 30)) + 1j * rng.standard_normal((30, 30))
    h = _random_spd(rng, 30)
    # independent oracle: min ||a x||_H / ||x||_H via the generalized eigenproblem
    # a^* H a x = s^2 H x, solved with dense scipy.linalg.eigh
    import scipy.linalg as la

    lam = la.eigh(a.conj().T @ h @ a, h, eigvals_only=True)
    oracle = np.sqrt(lam.min())
    assert smallest_singular_value(a, h) == pytest.approx(oracle, rel=1e-8)


def test_h_transform_preserves_spectrum():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((8, 8))
    h = _random_spd(rng, 8)
    t = h_transform(a, h)
    np.testing.assert_allclose(np.sort_complex(np.linalg.eigvals(t)), np.sort_complex(np.linalg.eigvals(a)), atol=1e-10)


def test_rejects_invalid_weight():
    with pytest.raises(ValueError):
        smallest_singular_value(np.eye(2), np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        smallest_singular_value(np.eye(2), -np.eye(2))


def test_nullspace_examples():
    z = nullspace_basis(np.array([[1.0, 1.0]]))
    assert z.shape == (2, 1)
    np.testing.assert_allclose(np.abs(z[:, 0]), [2**-0.5, 2**-0.5])
    assert z[0, 0] == pytest.approx(-z[1, 0])
    z = nullspace_basis(np.zeros((3, 5)))
    np.testing.assert_allclose(z.T @ z, np.eye(5), atol=1e-14)
    with pytest.raises(ValueError):
        nullspace_basis(np.eye(2), tol=0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10), st.integers(0, 2**31 - 1))
def test_nullspace_random_rank(r, seed):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal((10, r)) @ rng.standard_normal((r, 20))
    z = nullspace_basis(sp.csr_matrix(c))
    assert z.shape == (20, 20 - np.linalg.matrix_rank(c))
    assert np.linalg.norm(c @ z, 2) <= 1e-10 * max(1.0, np.linalg.norm(c, 2))
    np.testing.assert_allclose(z.T @ z, np.eye(z.shape[1]), atol=1e-12)
