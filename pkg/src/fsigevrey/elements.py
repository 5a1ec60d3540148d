"""
Reference-element shape functions and quadrature rules.

Reference triangle is {(0,0), (1,0), (0,1)}; the reference segment is [0, 1].
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    degree: int

    def integrate(self, f):
        """Apply the rule to a callable taking the point array."""
        return float(np.dot(self.weights, f(self.points)))


# Symmetric rules in orbit form, weights normalized to sum 1 (Dunavant).
#   ("s3", w)             centroid
#   ("s21", w, a)         permutations of (a, a, 1-2a)
#   ("s111", w, a, b)     permutations of (a, b, 1-a-b)
_TRIANGLE_ORBITS = {
    1: [("s3", 1.0)],
    2: [("s21", 1.0 / 3.0, 1.0 / 6.0)],
    4: [
        ("s21", 0.223381589678011, 0.445948490915965),
        ("s21", 0.109951743655322, 0.091576213509771),
    ],
    5: [
        ("s3", 0.225),
        ("s21", 0.132394152788506, 0.470142064105115),
        ("s21", 0.125939180544827, 0.101286507323456),
    ],
    6: [
        ("s21", 0.116786275726379, 0.249286745170910),
        ("s21", 0.050844906370207, 0.063089014491502),
        ("s111", 0.082851075618374, 0.053145049844817, 0.310352451033784),
    ],
    8: [
        ("s3", 0.144315607677787),
        ("s21", 0.095091634267285, 0.459292588292723),
        ("s21", 0.103217370534718, 0.170569307751760),
        ("s21", 0.032458497623198, 0.050547228317031),
        ("s111", 0.027230314174435, 0.008394777409958, 0.263112829634638),
    ],
}

# requested degree -> tabulated rule that covers it (all weights positive)
_TRIANGLE_TABLE = {1: 1, 2: 2, 3: 4, 4: 4, 5: 5, 6: 6, 7: 8}


def _expand_orbits(orbits):
    bary, weights = [], []
    for orbit in orbits:
        kind, w = orbit[0], orbit[1]
        if kind == "s3":
            pts = [(1 / 3, 1 / 3, 1 / 3)]
        elif kind == "s21":
            a = orbit[2]
            b = 1.0 - 2.0 * a
            pts = [(a, a, b), (a, b, a), (b, a, a)]
        else:
            a, b = orbit[2], orbit[3]
            c = 1.0 - a - b
            pts = [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]
        bary.extend(pts)
        weights.extend([w] * len(pts))
    bary = np.array(bary)
    # barycentric (l0, l1, l2) -> reference coords (x, y) = (l1, l2)
    return bary[:, 1:], np.array(weights)


def triangle_quadrature(degree):
    """Symmetric rule on the reference triangle, exact up to ``degree`` (1..7).

    Weights sum to the reference area 1/2.
    """
    if degree not in _TRIANGLE_TABLE:
        raise ValueError(f"unsupported triangle quadrature degree {degree!r} (1..7)")
    tab = _TRIANGLE_TABLE[degree]
    points, weights = _expand_orbits(_TRIANGLE_ORBITS[tab])
    return QuadratureRule(points, 0.5 * weights, tab)


def segment_quadrature(points=6):
    """Gauss-Legendre rule on [0, 1] with ``points`` nodes (1..12)."""
    if not isinstance(points, (int, np.integer)) or not 1 <= points <= 12:
        raise ValueError(f"unsupported segment quadrature size {points!r} (1..12)")
    x, w = np.polynomial.legendre.leggauss(int(points))
    return QuadratureRule(0.5 * (x + 1.0), 0.5 * w, 2 * int(points) - 1)


# ---------------------------------------------------------------- triangles

def p1_shape_eval(points):
    """Linear Lagrange basis. Returns values (..., 3) and gradients (..., 3, 2)."""
    p = np.asarray(points, dtype=float)
    x, y = p[..., 0], p[..., 1]
    values = np.stack([1.0 - x - y, x, y], axis=-1)
    grads = np.broadcast_to(
        np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]), p.shape[:-1] + (3, 2)
    ).copy()
    return values, grads


def p2_shape_eval(points):
    """Quadratic Lagrange basis on the reference triangle.

    Local ordering: vertices 0, 1, 2, then midpoints of edges (0,1), (1,2), (2,0).

    Returns
    -------
    values : ndarray (..., 6)
    grads : ndarray (..., 6, 2)
    """
    p = np.asarray(points, dtype=float)
    x, y = p[..., 0], p[..., 1]
    l0, l1, l2 = 1.0 - x - y, x, y
    values = np.stack(
        [
            l0 * (2 * l0 - 1),
            l1 * (2 * l1 - 1),
            l2 * (2 * l2 - 1),
            4 * l0 * l1,
            4 * l1 * l2,
            4 * l2 * l0,
        ],
        axis=-1,
    )
    # d(l0, l1, l2)/d(x, y) = (-1,-1), (1,0), (0,1)
    gx = np.stack(
        [-(4 * l0 - 1), 4 * l1 - 1, 0 * x, 4 * (l0 - l1), 4 * l2, -4 * l2], axis=-1
    )
    gy = np.stack(
        [-(4 * l0 - 1), 0 * x, 4 * l2 - 1, -4 * l1, 4 * l1, 4 * (l0 - l2)], axis=-1
    )
    return values, np.stack([gx, gy], axis=-1)


P2_REFERENCE_NODES = np.array(
    [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 0.0], [0.5, 0.5], [0.0, 0.5]]
)


# ------------------------------------------------------------------ Hermite

# Interpolation conditions for the quintic standard element, in basis order:
# value at 0, value at 1, value at 1/3, value at 2/3, slope at 0, slope at 1.
HERMITE_VALUE_NODES = (Fraction(0), Fraction(1), Fraction(1, 3), Fraction(2, 3))
HERMITE_SLOPE_NODES = (Fraction(0), Fraction(1))
HERMITE_IS_SLOPE = np.array([False, False, False, False, True, True])


def _solve_exact(a, b):
    """Gauss-Jordan elimination over the rationals."""
    n = len(a)
    m = [list(row) + list(rhs) for row, rhs in zip(a, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise ArithmeticError("singular Hermite interpolation system")
        m[col], m[piv] = m[piv], m[col]
        pv = m[col][col]
        m[col] = [v / pv for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [vr - f * vc for vr, vc in zip(m[r], m[col])]
    return [row[n:] for row in m]


def _hermite_coefficients_exact():
    rows = []
    for x in HERMITE_VALUE_NODES:
        rows.append([x**k for k in range(6)])
    for x in HERMITE_SLOPE_NODES:
        rows.append([k * x ** (k - 1) if k > 0 else Fraction(0) for k in range(6)])
    # V c_j = e_j for each basis function j; solve with identity right-hand side
    eye = [[Fraction(int(i == j)) for j in range(6)] for i in range(6)]
    sol = _solve_exact(rows, eye)
    # sol[k][j] = coefficient of x**k in basis function j
    return sol


_HERMITE_EXACT = _hermite_coefficients_exact()
_HERMITE_COEFFS = np.array([[float(v) for v in row] for row in _HERMITE_EXACT])


def hermite_quintic_basis(exact=False):
    """Monomial coefficients of the six quintic Hermite basis functions on [0, 1].

    ``coeffs[k, j]`` multiplies ``x**k`` in basis function ``j``. With
    ``exact=True`` a nested list of :class:`fractions.Fraction` is returned.
    """
    if exact:
        return [list(row) for row in _HERMITE_EXACT]
    return _HERMITE_COEFFS.copy()


def hermite_eval(xi, deriv=0, h=1.0):
    """Evaluate the six Hermite basis functions (or a derivative) at ``xi``.

    ``xi`` is the local coordinate in [0, 1] of an element of length ``h``.
    Slope basis functions are scaled by ``h`` so that their physical slope at
    the node is one; derivatives are taken in the physical coordinate.
    Returns an array of shape ``xi.shape + (6,)``.
    """
    xi = np.asarray(xi, dtype=float)
    c = _HERMITE_COEFFS
    for _ in range(deriv):
        c = c[1:] * np.arange(1, c.shape[0])[:, None]
    powers = xi[..., None] ** np.arange(c.shape[0])
    vals = powers @ c
    scale = np.where(HERMITE_IS_SLOPE, h, 1.0) / h**deriv
    return vals * scale


def _poly_derivative(c, k):
    for _ in range(k):
        c = [i * c[i] for i in range(1, len(c))]
    return c


def hermite_gram_exact(deriv=0):
    """``G[i, j] = int_0^1 theta_i^(deriv) theta_j^(deriv)`` on the unit element, as Fractions."""
    basis = [_poly_derivative([row[j] for row in _HERMITE_EXACT], deriv) for j in range(6)]
    out = []
    for a in basis:
        row = []
        for b in basis:
            row.append(sum(
                (ai * bk / (i + k + 1) for i, ai in enumerate(a) for k, bk in enumerate(b)),
                Fraction(0),
            ))
        out.append(row)
    return out


_HERMITE_GRAM = {d: np.array(hermite_gram_exact(d), dtype=float) for d in (0, 2)}


def hermite_gram(deriv=0, h=1.0):
    """Element Gram matrix of the ``deriv``-th derivatives for element length ``h``.

    Integrals are exact rationals on the unit element, then scaled: slope
    functions carry a factor ``h`` and each derivative contributes ``1/h``.
    """
    if deriv not in _HERMITE_GRAM:
        _HERMITE_GRAM[deriv] = np.array(hermite_gram_exact(deriv), dtype=float)
    d = np.where(HERMITE_IS_SLOPE, h, 1.0)
    return _HERMITE_GRAM[deriv] * np.outer(d, d) * h ** (1 - 2 * deriv)
