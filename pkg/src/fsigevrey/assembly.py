"""
Finite element matrices of the coupled fluid/plate system and their
reduction to the unconstrained unknowns.

Raw matrices (full index spaces)::

    Mf[i, j] = (phi_i, phi_j)          Kf[i, j] = (grad phi_i, grad phi_j)
    Bx[i, j] = (d_x phi_i, psi_j)      By[i, j] = (d_y phi_i, psi_j)
    Ms[i, j] = <theta_i, theta_j>      S[i, j]  = <theta_i'', theta_j''>

with P2 velocity basis ``phi``, P1 pressure basis ``psi`` and quintic Hermite
plate basis ``theta``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .elements import (
    hermite_eval,
    hermite_gram,
    p1_shape_eval,
    p2_shape_eval,
    segment_quadrature,
    triangle_quadrature,
)
from .mesh import CONSTRAINED, INTERFACE, build_dof_map

MASS_DEGREE = 4
STIFFNESS_DEGREE = 2
DIVERGENCE_DEGREE = 3
PLATE_POINTS = 6


# ---------------------------------------------------------------- reference

def reference_p2_mass():
    q = triangle_quadrature(MASS_DEGREE)
    phi, _ = p2_shape_eval(q.points)
    return np.einsum("q,qi,qj->ij", q.weights, phi, phi)


def reference_p2_stiffness():
    q = triangle_quadrature(STIFFNESS_DEGREE)
    _, g = p2_shape_eval(q.points)
    return np.einsum("q,qid,qjd->ij", q.weights, g, g)


def reference_divergence():
    """(d_x phi_i, psi_j) and (d_y phi_i, psi_j) on the reference triangle, 6x3 each."""
    q = triangle_quadrature(DIVERGENCE_DEGREE)
    _, g = p2_shape_eval(q.points)
    psi, _ = p1_shape_eval(q.points)
    bx = np.einsum("q,qi,qj->ij", q.weights, g[..., 0], psi)
    by = np.einsum("q,qi,qj->ij", q.weights, g[..., 1], psi)
    return bx, by


def reference_hermite_mass(h=1.0):
    return hermite_gram(0, h)


def reference_hermite_stiffness(h=1.0):
    return hermite_gram(2, h)


# ------------------------------------------------------------------- fluid

def _element_geometry(mesh, order=None):
    cells = mesh.triangles if order is None else mesh.triangles[order]
    p = mesh.vertices[cells]
    jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1)  # (E, 2, 2) columns
    det = np.linalg.det(jac)
    inv_t = np.linalg.inv(jac).transpose(0, 2, 1)
    return det, inv_t


def _scatter(rows, cols, vals, shape):
    return sp.coo_matrix(
        (vals.ravel(), (rows.ravel(), cols.ravel())), shape=shape
    ).tocsr()


def _cells(mesh, order):
    return mesh.p2_cells if order is None else mesh.p2_cells[order]


def assemble_fluid_mass(mesh, order=None):
    det, _ = _element_geometry(mesh, order)
    local = np.abs(det)[:, None, None] * reference_p2_mass()[None]
    cells = _cells(mesh, order)
    rows = np.repeat(cells[:, :, None], 6, axis=2)
    cols = np.repeat(cells[:, None, :], 6, axis=1)
    return _scatter(rows, cols, local, (mesh.num_nodes,) * 2)


def assemble_fluid_stiffness(mesh, order=None):
    det, inv_t = _element_geometry(mesh, order)
    q = triangle_quadrature(STIFFNESS_DEGREE)
    _, g = p2_shape_eval(q.points)
    gphys = np.einsum("eab,qib->eqia", inv_t, g)
    local = np.abs(det)[:, None, None] * np.einsum("q,eqia,eqja->eij", q.weights, gphys, gphys)
    cells = _cells(mesh, order)
    rows = np.repeat(cells[:, :, None], 6, axis=2)
    cols = np.repeat(cells[:, None, :], 6, axis=1)
    return _scatter(rows, cols, local, (mesh.num_nodes,) * 2)


def assemble_divergence(mesh, order=None):
    """Return ``(Bx, By)``, each of shape (num P2 nodes, num vertices)."""
    det, inv_t = _element_geometry(mesh, order)
    q = triangle_quadrature(DIVERGENCE_DEGREE)
    _, g = p2_shape_eval(q.points)
    psi, _ = p1_shape_eval(q.points)
    gphys = np.einsum("eab,qib->eqia", inv_t, g)
    w = np.abs(det)[:, None, None]
    bx = w * np.einsum("q,eqi,qj->eij", q.weights, gphys[..., 0], psi)
    by = w * np.einsum("q,eqi,qj->eij", q.weights, gphys[..., 1], psi)
    cells = _cells(mesh, order)
    tris = mesh.triangles if order is None else mesh.triangles[order]
    rows = np.repeat(cells[:, :, None], 3, axis=2)
    cols = np.repeat(tris[:, None, :], 6, axis=1)
    shape = (mesh.num_nodes, mesh.num_vertices)
    return _scatter(rows, cols, bx, shape), _scatter(rows, cols, by, shape)


# ------------------------------------------------------------------- plate

def _plate_assemble(plate, local):
    dofs = plate.element_dofs
    rows = np.repeat(dofs[:, :, None], 6, axis=2)
    cols = np.repeat(dofs[:, None, :], 6, axis=1)
    loc = np.broadcast_to(local, (plate.num_elements, 6, 6))
    return _scatter(rows, cols, loc, (plate.num_dofs,) * 2)


def assemble_plate_mass(plate):
    return _plate_assemble(plate, reference_hermite_mass(plate.h))


def assemble_plate_stiffness(plate):
    return _plate_assemble(plate, reference_hermite_stiffness(plate.h))


def assemble_plate_load(plate):
    """``E_s[j] = <theta_j, 1>`` over all plate DOFs."""
    q = segment_quadrature(PLATE_POINTS)
    local = plate.h * q.weights @ hermite_eval(q.points, 0, plate.h)
    out = np.zeros(plate.num_dofs)
    np.add.at(out, plate.element_dofs.ravel(), np.tile(local, plate.num_elements))
    return out


@dataclass(frozen=True)
class CouplingMap:
    """Nodal velocity matching ``u2(N_i) = sum_j T[i, j] w2_j`` on the top edge.

    ``nodes`` are the Omega node indices in the row order of ``T``; ``E_s`` is
    the plate mean functional.
    """

    nodes: np.ndarray
    T: np.ndarray
    E_s: np.ndarray


def assemble_coupling(mesh, plate, dofmap=None):
    if dofmap is None:
        dofmap = build_dof_map(mesh, plate)
    return CouplingMap(
        nodes=dofmap.interface_nodes,
        T=dofmap.interface_coeffs.copy(),
        E_s=assemble_plate_load(plate),
    )


# -------------------------------------------------------------- reduction

@dataclass(frozen=True, eq=False)
class ReducedSystem:
    """Monolithic blocks on the unconstrained unknowns.

    State ordering is ``x = [alpha1, alpha2, omega1, omega2]`` (interior fluid
    velocity components, free plate displacement, free plate velocity); the
    multipliers are ``lam = [p, c_tilde]`` (P1 pressure, plate mean-pressure).
    The semi-discrete system reads::

        mass @ x' + stiffness @ x - constraint.T @ lam = F
        constraint @ x = 0

    ``mass`` is also the energy weight: fluid mass on the velocity, plate
    mass on omega2 and plate bending stiffness on omega1.
    ``dissipation`` is the fluid Dirichlet form (symmetric part of stiffness).
    ``displacement_constraint`` holds the plate functionals that omega1 must
    annihilate for the state to lie in the invariant subspace (mean zero and
    zero discrete interface flux).
    """

    mesh: object
    plate: object
    dofmap: object
    raw: dict
    prolong: sp.csr_matrix
    plate_prolong: sp.csr_matrix
    mass: sp.csr_matrix
    stiffness: sp.csr_matrix
    dissipation: sp.csr_matrix
    constraint: sp.csr_matrix
    divergence: sp.csr_matrix
    plate_mass: np.ndarray
    plate_stiffness: np.ndarray
    plate_mean: np.ndarray
    plate_flux: np.ndarray

    @property
    def n_u1(self):
        return self.dofmap.num_u1

    @property
    def n_u2(self):
        return self.dofmap.num_u2

    @property
    def n_plate(self):
        return self.dofmap.num_plate

    @property
    def n_pressure(self):
        return self.dofmap.num_pressure

    @property
    def n_state(self):
        return self.n_u1 + self.n_u2 + 2 * self.n_plate

    @property
    def n_multipliers(self):
        return self.constraint.shape[0]

    @property
    def size(self):
        return self.n_state + self.n_multipliers

    @property
    def slices(self):
        a, b, c = self.n_u1, self.n_u2, self.n_plate
        return {
            "alpha1": slice(0, a),
            "alpha2": slice(a, a + b),
            "omega1": slice(a + b, a + b + c),
            "omega2": slice(a + b + c, a + b + 2 * c),
        }

    def velocity_mask(self):
        m = np.ones(self.n_state, dtype=bool)
        m[self.slices["omega1"]] = False
        return m

    def displacement_constraint(self):
        """2 x n_state matrix acting on omega1 only."""
        out = np.zeros((2, self.n_state))
        s = self.slices["omega1"]
        out[0, s] = self.plate_mean
        out[1, s] = self.plate_flux
        return out

    def fluid_velocity(self, x):
        """Full nodal (u1, u2) from a state vector."""
        u = self.prolong @ x
        m = self.mesh.num_nodes
        return u[:m], u[m:]

    def plate_fields(self, x):
        s = self.slices
        return self.plate_prolong @ x[s["omega1"]], self.plate_prolong @ x[s["omega2"]]


def apply_constraints(mesh, plate, dofmap=None):
    """Assemble every raw matrix and eliminate the essential constraints.

    Wall and clamped DOFs are dropped; interface u2 values are slaved to the
    plate velocity via the coupling matrix, so fluid contributions at the top
    edge accumulate on the plate velocity unknowns.
    """
    if dofmap is None:
        dofmap = build_dof_map(mesh, plate)
    Mf = assemble_fluid_mass(mesh)
    Kf = assemble_fluid_stiffness(mesh)
    Bx, By = assemble_divergence(mesh)
    Ms = assemble_plate_mass(plate)
    S = assemble_plate_stiffness(plate)
    coupling = assemble_coupling(mesh, plate, dofmap)

    nn = mesh.num_nodes
    n1, n2, npl = dofmap.num_u1, dofmap.num_u2, dofmap.num_plate
    free = plate.free_dofs()
    if len(free) != npl:
        raise RuntimeError("plate DOF map inconsistent with clamped set")
    o1 = n1 + n2
    o2 = n1 + n2 + npl
    nstate = n1 + n2 + 2 * npl

    # fluid prolongation: state -> (u1 nodal, u2 nodal)
    rows, cols, vals = [], [], []
    for i in range(nn):
        if dofmap.fluid_u1[i] >= 0:
            rows.append(i), cols.append(dofmap.fluid_u1[i]), vals.append(1.0)
        if dofmap.fluid_u2[i] >= 0:
            rows.append(nn + i), cols.append(n1 + dofmap.fluid_u2[i]), vals.append(1.0)
    tfree = coupling.T[:, free]
    for r, node in enumerate(coupling.nodes):
        assert dofmap.fluid_u2[node] == INTERFACE
        for c in np.nonzero(tfree[r])[0]:
            rows.append(nn + node), cols.append(o2 + c), vals.append(tfree[r, c])
    Q = sp.csr_matrix((vals, (rows, cols)), shape=(2 * nn, nstate))

    R = sp.csr_matrix(
        (np.ones(npl), (free, np.arange(npl))), shape=(plate.num_dofs, npl)
    )
    Ms_r = (R.T @ Ms @ R).toarray()
    S_r = (R.T @ S @ R).toarray()
    E_r = R.T @ coupling.E_s

    M2 = sp.block_diag([Mf, Mf]).tocsr()
    K2 = sp.block_diag([Kf, Kf]).tocsr()
    B2 = sp.vstack([Bx, By]).tocsr()

    Mv = (Q.T @ M2 @ Q).tolil()
    Kv = (Q.T @ K2 @ Q).tocsr()
    Bv = (Q.T @ B2).tocsr()  # nstate x Mp, zero rows on omega1

    s1 = slice(o1, o1 + npl)
    s2 = slice(o2, o2 + npl)
    Mv[s2, s2] = Mv[s2, s2].toarray() + Ms_r
    Mv[s1, s1] = S_r
    mass = Mv.tocsr()

    stiff = Kv.tolil()
    stiff[s2, s1] = S_r
    stiff[s1, s2] = -S_r
    stiffness = stiff.tocsr()

    emean = np.zeros(nstate)
    emean[s2] = E_r
    constraint = sp.vstack([Bv.T, sp.csr_matrix(emean[None, :])]).tocsr()

    # discrete interface flux: the sum of all divergence rows seen by omega2
    flux = np.asarray(Bv[s2, :].sum(axis=1)).ravel()

    for m in (mass, stiffness, Kv, constraint, Bv):
        m.eliminate_zeros()
    raw = {"Mf": Mf, "Kf": Kf, "Bx": Bx, "By": By, "Ms": Ms, "S": S, "coupling": coupling}
    return ReducedSystem(
        mesh=mesh,
        plate=plate,
        dofmap=dofmap,
        raw=raw,
        prolong=Q,
        plate_prolong=R,
        mass=mass,
        stiffness=stiffness,
        dissipation=Kv,
        constraint=constraint,
        divergence=Bv,
        plate_mass=Ms_r,
        plate_stiffness=S_r,
        plate_mean=E_r,
        plate_flux=flux,
    )


def dump_matrix(path, a, comment=None):
    """Write ``row col value`` triples (17 significant digits), one per line."""
    coo = sp.coo_matrix(a)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        if comment:
            fh.write(f"# {comment} columns=row,col,value\n")
        fh.write(f"# shape {coo.shape[0]} {coo.shape[1]}\n")
        for k in order:
            fh.write(f"{coo.row[k]} {coo.col[k]} {coo.data[k]:.17g}\n")
