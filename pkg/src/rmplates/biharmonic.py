"""Morley discretization of the shifted Kirchhoff-Love plate pencil.

The operator E/(12(1-sigma^2)) Delta^2 u + u is assembled elementwise from

    (1-sigma) D^2 u : D^2 v + sigma (Delta u)(Delta v)

with the Morley triangle, whose nonconforming second derivatives are
constant per element.  Four limit boundary-condition families are realized
by selecting which Morley dofs are constrained on the boundary:

    clamped       vertex values and edge normal derivatives
    navier        vertex values only
    intermediate  edge normal derivatives only (Kuttler-Sigillito)
    free          none

The plate families with w free at the boundary (hard rigid, weak Neumann)
have no standard biharmonic limit and are rejected.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .assemble import SparseSymMatrix, assemble, mass_density
from .errors import UnsupportedLimitError
from .geometry import ElementKind, Mesh
from .quadrature import triangle_rule
from .rm_system import BcFamily
from .spaces import MORLEY, DofMap, build_dofmap


class LimitBc(str, Enum):
    CLAMPED = "clamped"
    NAVIER = "navier"
    INTERMEDIATE = "intermediate"
    FREE = "free"


_LIMIT_MAP = {
    BcFamily.HARD_CLAMPED: LimitBc.CLAMPED,
    BcFamily.SOFT_CLAMPED: LimitBc.CLAMPED,
    BcFamily.HARD_SIMPLY_SUPPORTED: LimitBc.NAVIER,
    BcFamily.SOFT_SIMPLY_SUPPORTED: LimitBc.NAVIER,
    BcFamily.SOFT_RIGID: LimitBc.INTERMEDIATE,
    BcFamily.FREE: LimitBc.FREE,
}


def map_limit_bc(bc: BcFamily) -> LimitBc:
    """Thin-plate limit family of a Reissner-Mindlin BC family."""
    bc = BcFamily(bc)
    if bc not in _LIMIT_MAP:
        raise UnsupportedLimitError(
            f"{bc.value} leads to a non-standard limit problem (u constant per "
            "boundary component); not discretized"
        )
    return _LIMIT_MAP[bc]


def _essential(bc: LimitBc):
    if bc == LimitBc.FREE:
        return None
    want_vertex = bc in (LimitBc.CLAMPED, LimitBc.NAVIER)
    want_edge = bc in (LimitBc.CLAMPED, LimitBc.INTERMEDIATE)
    return lambda tag, comp, normal: (comp == 0 and want_vertex) or (comp == 1 and want_edge)


@dataclass
class BiharmonicPencil:
    A: SparseSymMatrix
    B: SparseSymMatrix
    mesh: Mesh
    dofmap: DofMap
    E: float
    sigma: float
    bc: LimitBc


def assemble_biharmonic_pencil(mesh: Mesh, E: float, sigma: float, bc: LimitBc) -> BiharmonicPencil:
    """A = prefactor * bending + mass, B = mass, over the free Morley dofs."""
    if mesh.element_kind != ElementKind.TRI3:
        raise ValueError("the biharmonic pencil needs a triangle mesh (see split_quads)")
    if not -1.0 < sigma < 1.0:
        raise ValueError("sigma must lie in (-1, 1)")
    bc = LimitBc(bc)
    dofmap = build_dofmap(mesh, MORLEY, _essential(bc))
    quad = triangle_rule(4)
    pref = E / (12.0 * (1.0 - sigma**2))

    def density(batch):
        lap = batch.hess[..., 0, 0] + batch.hess[..., 1, 1]
        bend = (1.0 - sigma) * np.einsum("eq,eqiab,eqjab->eij", batch.w, batch.hess, batch.hess)
        bend += sigma * np.einsum("eq,eqi,eqj->eij", batch.w, lap, lap)
        m = mass_density(batch)
        return pref * bend + m

    A = assemble(mesh, dofmap, density, quad)
    B = assemble(mesh, dofmap, mass_density, quad)
    return BiharmonicPencil(A, B, mesh, dofmap, E, sigma, bc)


def solve_biharmonic_source(pencil: BiharmonicPencil, f) -> np.ndarray:
    """Solve A u = (f, phi_i); returns the full Morley coefficient vector."""
    from .assemble import assemble_load
    from .rm_system import sparse_solve

    load = assemble_load(pencil.mesh, pencil.dofmap, f, triangle_rule(4))
    u = sparse_solve(pencil.A.full(), load)
    return pencil.dofmap.expand(u)


def morley_interpolate(mesh: Mesh, fn, grad_fn) -> np.ndarray:
    """Morley interpolant: vertex values of fn, edge-midpoint normal
    derivatives of grad_fn (with the global edge-normal convention)."""
    from .spaces import edge_normal, edge_table

    edges, _ = edge_table(mesh)
    vals = np.asarray(fn(mesh.nodes))
    mids = 0.5 * (mesh.nodes[edges[:, 0]] + mesh.nodes[edges[:, 1]])
    grads = np.asarray(grad_fn(mids))
    normals = np.array([edge_normal(mesh, int(a), int(b)) for a, b in edges])
    return np.concatenate([vals, np.sum(grads * normals, axis=1)])


def vertex_values(mesh: Mesh, coeffs: np.ndarray) -> np.ndarray:
    """Morley vertex dofs are nodal values; convenience slice."""
    return coeffs[: mesh.n_nodes]
