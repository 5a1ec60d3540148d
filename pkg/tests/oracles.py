"""Independent symbolic references, built with sympy from first principles.

Nothing here imports the package: shape functions are obtained by solving
nodal interpolation conditions for a full polynomial space and integrals
are exact.
"""

from functools import lru_cache

import numpy as np
import sympy as sp

x, y = sp.symbols("x y")

P2_NODES = [(0, 0), (1, 0), (0, 1), (sp.Rational(1, 2), 0), (sp.Rational(1, 2), sp.Rational(1, 2)), (0, sp.Rational(1, 2))]
P1_NODES = [(0, 0), (1, 0), (0, 1)]


def _lagrange_basis(monomials, nodes):
    monomials = [sp.sympify(m) for m in monomials]
    V = sp.Matrix([[m.subs({x: px, y: py}) for m in monomials] for px, py in nodes])
    coeffs = V.inv()  # column j gives the basis function dual to node j
    return [sp.expand(sum(coeffs[k, j] * monomials[k] for k in range(len(monomials)))) for j in range(len(nodes))]


@lru_cache(maxsize=None)
def p2_basis():
    return tuple(_lagrange_basis([1, x, y, x * x, x * y, y * y], P2_NODES))


@lru_cache(maxsize=None)
def p1_basis():
    return tuple(_lagrange_basis([1, x, y], P1_NODES))


def triangle_integral(f):
    return sp.integrate(sp.integrate(f, (y, 0, 1 - x)), (x, 0, 1))


@lru_cache(maxsize=None)
def p2_mass():
    phi = p2_basis()
    return sp.Matrix(6, 6, lambda i, j: triangle_integral(phi[i] * phi[j]))


@lru_cache(maxsize=None)
def p2_stiffness():
    phi = p2_basis()
    return sp.Matrix(
        6, 6,
        lambda i, j: triangle_integral(
            sp.diff(phi[i], x) * sp.diff(phi[j], x) + sp.diff(phi[i], y) * sp.diff(phi[j], y)
        ),
    )


@lru_cache(maxsize=None)
def p1_coupling():
    phi, psi = p2_basis(), p1_basis()
    bx = sp.Matrix(6, 3, lambda i, j: triangle_integral(sp.diff(phi[i], x) * psi[j]))
    by = sp.Matrix(6, 3, lambda i, j: triangle_integral(sp.diff(phi[i], y) * psi[j]))
    return bx, by


@lru_cache(maxsize=None)
def hermite_basis():
    """Quintic duals of: values at 0, 1, 1/3, 2/3 and slopes at 0, 1."""
    mons = [x**k for k in range(6)]
    functionals = [
        lambda f: f.subs(x, 0),
        lambda f: f.subs(x, 1),
        lambda f: f.subs(x, sp.Rational(1, 3)),
        lambda f: f.subs(x, sp.Rational(2, 3)),
        lambda f: sp.diff(f, x).subs(x, 0),
        lambda f: sp.diff(f, x).subs(x, 1),
    ]
    V = sp.Matrix(6, 6, lambda i, k: functionals[i](mons[k]))
    C = V.inv()
    return tuple(sp.expand(sum(C[k, j] * mons[k] for k in range(6))) for j in range(6))


def hermite_scaled(h):
    """Basis on an element of length h, in the local coordinate; slopes scaled by h."""
    th = list(hermite_basis())
    return [t * (h if j >= 4 else 1) for j, t in enumerate(th)]


def hermite_mass(h=1):
    h = sp.nsimplify(h)
    th = hermite_scaled(h)
    return sp.Matrix(6, 6, lambda i, j: h * sp.integrate(th[i] * th[j], (x, 0, 1)))


def hermite_stiffness(h=1):
    h = sp.nsimplify(h)
    th = hermite_scaled(h)
    d2 = [sp.diff(t, x, 2) / h**2 for t in th]
    return sp.Matrix(6, 6, lambda i, j: h * sp.integrate(d2[i] * d2[j], (x, 0, 1)))


def hermite_load(h=1):
    h = sp.nsimplify(h)
    return [h * sp.integrate(t, (x, 0, 1)) for t in hermite_scaled(h)]


def to_array(m):
    return np.array(m.tolist(), dtype=float)
