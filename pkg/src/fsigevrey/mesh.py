"""
Structured triangulation of the unit square, the plate mesh on its top edge,
and the degree-of-freedom maps tying them together.

Node tags follow the boundary decomposition of the fluid domain: ``S`` is the
rigid wall (left, bottom, right), ``Omega`` the open top edge carrying the
plate, and ``Corner`` the two points (0,1), (1,1) where the clamped plate
meets the wall.
"""

import csv
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .elements import hermite_eval


class Tag(str, Enum):
    INTERIOR = "Interior"
    S = "S"
    OMEGA = "Omega"
    CORNER = "Corner"


CONSTRAINED = -1
INTERFACE = -2


class MeshIncompatibilityError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Mesh2D:
    """P2 triangulation of (0,1)^2.

    ``nodes`` lists vertices first (index ``j*(n+1) + i`` for ``(i/n, j/n)``)
    followed by one midpoint per edge. ``p2_cells`` holds, per triangle, the
    three vertex indices and the three midpoint node indices in the local
    order used by :func:`~fsigevrey.elements.p2_shape_eval`.
    """

    n: int
    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    nodes: np.ndarray
    p2_cells: np.ndarray
    tags: tuple

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_nodes(self):
        return len(self.nodes)

    @property
    def num_triangles(self):
        return len(self.triangles)

    def nodes_with_tag(self, tag):
        return np.array([i for i, t in enumerate(self.tags) if t == tag], dtype=int)

    def signed_areas(self):
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def write_csv(self, node_path, tri_path, comment=None):
        with open(node_path, "w", newline="") as fh:
            if comment:
                fh.write(f"# {comment} columns=node_id,x,y,tag\n")
            w = csv.writer(fh)
            w.writerow(["node_id", "x", "y", "tag"])
            for i, (xy, tag) in enumerate(zip(self.nodes, self.tags)):
                w.writerow([i, f"{xy[0]:.17g}", f"{xy[1]:.17g}", tag.value])
        with open(tri_path, "w", newline="") as fh:
            if comment:
                fh.write(f"# {comment} columns=tri_id,v0,v1,v2\n")
            w = csv.writer(fh)
            w.writerow(["tri_id", "v0", "v1", "v2"])
            for i, tri in enumerate(self.triangles):
                w.writerow([i, *tri])


def _tag(x, y):
    on_top = y == 1.0
    on_wall = x == 0.0 or x == 1.0 or y == 0.0
    if on_top and (x == 0.0 or x == 1.0):
        return Tag.CORNER
    if on_top:
        return Tag.OMEGA
    if on_wall:
        return Tag.S
    return Tag.INTERIOR


def build_unit_square_mesh(n):
    """Uniform n-by-n grid, each square split along its bottom-left/top-right diagonal."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"mesh subdivision count must be a positive integer, got {n!r}")
    n = int(n)
    ii, jj = np.meshgrid(np.arange(n + 1), np.arange(n + 1))
    vertices = np.column_stack([ii.ravel() / n, jj.ravel() / n])

    tris = []
    for j in range(n):
        for i in range(n):
            v00 = j * (n + 1) + i
            v10, v01, v11 = v00 + 1, v00 + n + 1, v00 + n + 2
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    triangles = np.array(tris, dtype=int)

    edge_index = {}
    edges = []
    cell_mid = np.empty((len(triangles), 3), dtype=int)
    for t, (a, b, c) in enumerate(triangles):
        for k, (p, q) in enumerate(((a, b), (b, c), (c, a))):
            key = (min(p, q), max(p, q))
            if key not in edge_index:
                edge_index[key] = len(edges)
                edges.append(key)
            cell_mid[t, k] = edge_index[key]
    edges = np.array(edges, dtype=int)

    nv = len(vertices)
    midpoints = 0.5 * (vertices[edges[:, 0]] + vertices[edges[:, 1]])
    nodes = np.vstack([vertices, midpoints])
    p2_cells = np.hstack([triangles, nv + cell_mid])
    # midpoints of grid-aligned edges are exact dyadic halves; ties to 0/1 are exact
    tags = tuple(_tag(float(x), float(y)) for x, y in nodes)
    return Mesh2D(n, vertices, triangles, edges, nodes, p2_cells, tags)


class DofKind(str, Enum):
    VALUE = "Value"
    DERIVATIVE = "Derivative"


@dataclass(frozen=True, eq=False)
class PlateMesh:
    """Quintic Hermite mesh of the plate on [0, 1].

    Indices ``0 .. M~-1`` are value DOFs at the Lagrange points, ``M~ .. DOF_s-1``
    are slope DOFs at element endpoints (zero-based version of the usual
    1-based numbering).
    """

    num_elements: int
    lagrange_nodes: np.ndarray
    hermite_nodes: np.ndarray
    element_dofs: np.ndarray

    @property
    def num_lagrange(self):
        return len(self.lagrange_nodes)

    @property
    def num_dofs(self):
        return self.num_lagrange + len(self.hermite_nodes)

    @property
    def h(self):
        return 1.0 / self.num_elements

    def dof_map(self):
        """List of (node coordinate, kind) per global DOF index."""
        out = [(x, DofKind.VALUE) for x in self.lagrange_nodes]
        out += [(x, DofKind.DERIVATIVE) for x in self.hermite_nodes]
        return out

    def clamped_dofs(self):
        m = self.num_lagrange
        return np.array([0, m - 1, m, self.num_dofs - 1], dtype=int)

    def free_dofs(self):
        return np.setdiff1d(np.arange(self.num_dofs), self.clamped_dofs())

    def locate(self, x):
        """Element index and local coordinate for points ``x`` in [0, 1]."""
        x = np.asarray(x, dtype=float)
        if np.any(x < 0.0) or np.any(x > 1.0):
            raise MeshIncompatibilityError("point outside the plate mesh [0, 1]")
        el = np.minimum((x * self.num_elements).astype(int), self.num_elements - 1)
        xi = (x - self.hermite_nodes[el]) / self.h
        return el, xi

    def basis_matrix(self, x, deriv=0):
        """Dense matrix ``B[i, j] = theta_j^(deriv)(x_i)`` over all plate DOFs."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        el, xi = self.locate(x)
        vals = hermite_eval(xi, deriv=deriv, h=self.h)
        out = np.zeros((len(x), self.num_dofs))
        rows = np.repeat(np.arange(len(x)), 6)
        np.add.at(out, (rows, self.element_dofs[el].ravel()), vals.ravel())
        return out

    def interpolate(self, f, df):
        """Hermite interpolant coefficients of ``f`` with slope data ``df``."""
        return np.concatenate([f(self.lagrange_nodes), df(self.hermite_nodes)])

    def evaluate(self, coeffs, x, deriv=0):
        return self.basis_matrix(x, deriv) @ coeffs


def build_plate_mesh(num_elements):
    if not isinstance(num_elements, (int, np.integer)) or num_elements < 1:
        raise ValueError(f"plate element count must be a positive integer, got {num_elements!r}")
    L = int(num_elements)
    m = 3 * L + 1
    lagrange = np.arange(m) / (3 * L)
    hermite = np.arange(L + 1) / L
    el = np.arange(L)
    # local order: value left, value right, value 1/3, value 2/3, slope left, slope right
    element_dofs = np.column_stack(
        [3 * el, 3 * el + 3, 3 * el + 1, 3 * el + 2, m + el, m + el + 1]
    )
    plate = PlateMesh(L, lagrange, hermite, element_dofs)
    assert plate.num_dofs == m + (m + 2) // 3
    return plate


@dataclass(frozen=True, eq=False)
class DofMap:
    """Global numbering of the fluid/plate/pressure unknowns.

    Velocity components map each P2 node to an unknown index within its block,
    :data:`CONSTRAINED` for wall nodes, or :data:`INTERFACE` (u2 on Omega) in
    which case the value is slaved to the plate velocity through
    ``interface_coeffs``. Plate maps send each plate DOF to its reduced index
    or :data:`CONSTRAINED` for the clamped ones.
    """

    fluid_u1: np.ndarray
    fluid_u2: np.ndarray
    plate_w1: np.ndarray
    plate_w2: np.ndarray
    pressure: np.ndarray
    interface_nodes: np.ndarray
    interface_coeffs: np.ndarray

    @property
    def interface_pairs(self):
        return list(zip(self.interface_nodes.tolist(), self.interface_coeffs))

    @property
    def num_u1(self):
        return int(np.sum(self.fluid_u1 >= 0))

    @property
    def num_u2(self):
        return int(np.sum(self.fluid_u2 >= 0))

    @property
    def num_plate(self):
        return int(np.sum(self.plate_w2 >= 0))

    @property
    def num_pressure(self):
        return len(self.pressure)


def build_dof_map(mesh, plate):
    tags = mesh.tags
    u1 = np.full(mesh.num_nodes, CONSTRAINED, dtype=int)
    u2 = np.full(mesh.num_nodes, CONSTRAINED, dtype=int)
    k1 = k2 = 0
    for i, t in enumerate(tags):
        if t == Tag.INTERIOR:
            u1[i] = k1
            u2[i] = k2
            k1 += 1
            k2 += 1
        elif t == Tag.OMEGA:
            u2[i] = INTERFACE

    omega = mesh.nodes_with_tag(Tag.OMEGA)
    omega = omega[np.argsort(mesh.nodes[omega, 0], kind="stable")]
    x_top = mesh.nodes[omega, 0]
    if x_top.size and (x_top.min() < plate.hermite_nodes[0] or x_top.max() > plate.hermite_nodes[-1]):
        raise MeshIncompatibilityError("plate mesh does not cover the fluid interface nodes")
    coeffs = plate.basis_matrix(x_top) if x_top.size else np.zeros((0, plate.num_dofs))

    w = np.full(plate.num_dofs, CONSTRAINED, dtype=int)
    w[plate.free_dofs()] = np.arange(len(plate.free_dofs()))
    return DofMap(
        fluid_u1=u1,
        fluid_u2=u2,
        plate_w1=w.copy(),
        plate_w2=w.copy(),
        pressure=np.arange(mesh.num_vertices),
        interface_nodes=omega,
        interface_coeffs=coeffs,
    )
