"""Sparse symmetric Galerkin assembly over batched element bases.

`element_batch` tabulates basis values, gradients (and Hessians for Morley)
of one space at the quadrature points of every element at once; densities
turn a batch into per-element matrices, and `assemble` scatters them into a
`SparseSymMatrix` over the free dofs.  Symmetry is structural: only the
lower triangle is stored, mirrored on demand.
"""

from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import AssemblyError
from .geometry import ElementKind, Mesh
from .quadrature import QuadratureRule, quad_rule, segment_rule, triangle_rule
from .spaces import DofMap, ElementSpace, SpaceKind, edge_normal


class SparseSymMatrix:
    """Symmetric sparse matrix storing the lower triangle in CSR."""

    def __init__(self, lower: sp.csr_matrix):
        self.lower = lower.tocsr()
        self.lower.sum_duplicates()
        self.lower.eliminate_zeros()
        self.n = lower.shape[0]
        self._full = None

    @classmethod
    def from_entries(cls, n: int, rows, cols, vals) -> "SparseSymMatrix":
        """Build from accumulated lower-triangle entries (row >= col)."""
        lower = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        return cls(lower)

    def full(self) -> sp.csr_matrix:
        """Mirror to the full symmetric matrix (cached)."""
        if self._full is None:
            strict = sp.tril(self.lower, k=-1)
            self._full = (self.lower + strict.T).tocsr()
        return self._full

    def toarray(self) -> np.ndarray:
        return self.full().toarray()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.full() @ x

    def mmwrite(self, path) -> None:
        """Matrix Market coordinate format, symmetric storage."""
        scipy.io.mmwrite(path, self.full(), symmetry="symmetric")


@dataclass
class ElementBatch:
    """Tabulated basis data: x (ne,nq,dim), w (ne,nq) with Jacobians folded in.

    Scalar spaces: phi (ne,nq,nloc), grad (ne,nq,nloc,dim).
    Vector spaces: phi (ne,nq,nloc,ncomp), grad (ne,nq,nloc,ncomp,dim).
    Morley additionally carries hess (ne,nq,nloc,dim,dim).
    """

    x: np.ndarray
    w: np.ndarray
    phi: np.ndarray
    grad: np.ndarray
    hess: np.ndarray = None
    space: ElementSpace = None


def default_rule(space: ElementSpace) -> QuadratureRule:
    kind = space.element_kind
    if kind == ElementKind.QUAD4:
        return quad_rule(2)
    if kind == ElementKind.SEGMENT:
        return segment_rule(3)
    return triangle_rule(4)


def q1_ref_basis(points: np.ndarray):
    """Bilinear shape functions and reference gradients on [-1,1]^2."""
    corners = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])
    xi, eta = points[:, 0][:, None], points[:, 1][:, None]
    cx, cy = corners[:, 0][None, :], corners[:, 1][None, :]
    phi = 0.25 * (1.0 + xi * cx) * (1.0 + eta * cy)
    dphi = np.empty((len(points), 4, 2))
    dphi[:, :, 0] = 0.25 * cx * (1.0 + eta * cy)
    dphi[:, :, 1] = 0.25 * cy * (1.0 + xi * cx)
    return phi, dphi


def quad_geometry(mesh: Mesh, quad: QuadratureRule):
    """Isoparametric geometry at quadrature points of all quad elements."""
    phi, dphi = q1_ref_basis(quad.points)
    X = mesh.nodes[mesh.elements]  # (ne, 4, 2)
    J = np.einsum("eia,qib->eqab", X, dphi)
    detJ = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    bad = np.nonzero(~np.all(detJ > 0, axis=1))[0]
    if len(bad):
        raise AssemblyError(int(bad[0]), "non-positive Jacobian")
    invJ = np.empty_like(J)
    invJ[..., 0, 0] = J[..., 1, 1] / detJ
    invJ[..., 0, 1] = -J[..., 0, 1] / detJ
    invJ[..., 1, 0] = -J[..., 1, 0] / detJ
    invJ[..., 1, 1] = J[..., 0, 0] / detJ
    x = np.einsum("qi,eia->eqa", phi, X)
    w = quad.weights[None, :] * detJ
    # physical gradient: (J^{-T} grad_ref)_a = invJ[b,a] dphi[b]
    grad = np.einsum("eqba,qib->eqia", invJ, dphi)
    return x, w, phi, grad


def segment_geometry(mesh: Mesh, quad: QuadratureRule):
    X = mesh.nodes[mesh.elements][..., 0]  # (ne, 2)
    h = X[:, 1] - X[:, 0]
    xi = quad.points[:, 0]
    x = X[:, 0][:, None] + h[:, None] * xi[None, :]
    w = quad.weights[None, :] * h[:, None]
    return x[..., None], w, h


def p2_ref_basis(xi: np.ndarray):
    """Quadratic shapes on [0,1] in local order (left, right, mid)."""
    phi = np.stack([(1 - xi) * (1 - 2 * xi), xi * (2 * xi - 1), 4 * xi * (1 - xi)], axis=1)
    dphi = np.stack([4 * xi - 3, 4 * xi - 1, 4 - 8 * xi], axis=1)
    return phi, dphi


def morley_element_basis(mesh: Mesh):
    """Per-element Morley coefficients in centroid-centred scaled monomials.

    Dofs: values at the three vertices, then normal derivatives (with the
    global edge-normal convention) at the midpoints of the edges opposite
    vertices 0, 1, 2.  Returns (coeffs (ne,6,6), centres, scales).
    """
    X = mesh.nodes[mesh.elements]  # (ne, 3, 2)
    ne = X.shape[0]
    centres = X.mean(axis=1)
    e1 = X[:, 1] - X[:, 0]
    e2 = X[:, 2] - X[:, 0]
    area = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    scales = np.sqrt(2.0 * area)

    D = np.zeros((ne, 6, 6))
    U = (X - centres[:, None, :]) / scales[:, None, None]
    for k in range(3):
        u, v = U[:, k, 0], U[:, k, 1]
        D[:, k, :] = np.stack([np.ones(ne), u, v, u * u, u * v, v * v], axis=1)
    local_edges = [(1, 2), (2, 0), (0, 1)]
    for k, (a, b) in enumerate(local_edges):
        ga, gb = mesh.elements[:, a], mesh.elements[:, b]
        normals = np.array([edge_normal(mesh, int(p), int(q)) for p, q in zip(ga, gb)])
        mid = 0.5 * (X[:, a] + X[:, b])
        m = (mid - centres) / scales[:, None]
        u, v = m[:, 0], m[:, 1]
        zeros = np.zeros(ne)
        dmono_du = np.stack([zeros, np.ones(ne), zeros, 2 * u, v, zeros], axis=1)
        dmono_dv = np.stack([zeros, zeros, np.ones(ne), zeros, u, 2 * v], axis=1)
        # physical gradient carries 1/scale
        D[:, 3 + k, :] = (normals[:, 0:1] * dmono_du + normals[:, 1:2] * dmono_dv) / scales[:, None]
    try:
        coeffs = np.linalg.inv(D)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise AssemblyError(-1, f"Morley dof matrix singular: {exc}")
    return coeffs, centres, scales


_MONO_HESS = np.zeros((6, 2, 2))
_MONO_HESS[3] = [[2.0, 0.0], [0.0, 0.0]]
_MONO_HESS[4] = [[0.0, 1.0], [1.0, 0.0]]
_MONO_HESS[5] = [[0.0, 0.0], [0.0, 2.0]]


def morley_batch(mesh: Mesh, quad: QuadratureRule) -> ElementBatch:
    coeffs, centres, scales = morley_element_basis(mesh)
    X = mesh.nodes[mesh.elements]
    lam = np.column_stack([1.0 - quad.points.sum(axis=1), quad.points])  # barycentric
    x = np.einsum("qk,eka->eqa", lam, X)
    e1 = X[:, 1] - X[:, 0]
    e2 = X[:, 2] - X[:, 0]
    area2 = np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    w = quad.weights[None, :] * area2[:, None]

    U = (x - centres[:, None, :]) / scales[:, None, None]
    u, v = U[..., 0], U[..., 1]
    one, zero = np.ones_like(u), np.zeros_like(u)
    mono = np.stack([one, u, v, u * u, u * v, v * v], axis=-1)  # (ne,nq,6)
    dmono = np.stack(
        [
            np.stack([zero, one, zero, 2 * u, v, zero], axis=-1),
            np.stack([zero, zero, one, zero, u, 2 * v], axis=-1),
        ],
        axis=-1,
    )  # (ne,nq,6,2) in scaled coords
    phi = np.einsum("eqm,emi->eqi", mono, coeffs)
    grad = np.einsum("eqmd,emi->eqid", dmono, coeffs) / scales[:, None, None, None]
    hess = np.einsum("mab,emi->eiab", _MONO_HESS, coeffs) / (scales**2)[:, None, None, None]
    hess = np.broadcast_to(hess[:, None, :, :, :], (X.shape[0], len(quad.weights), 6, 2, 2))
    return ElementBatch(x, w, phi, grad, hess=hess, space=ElementSpace(SpaceKind.MORLEY))


def element_batch(mesh: Mesh, space: ElementSpace, quad: QuadratureRule = None) -> ElementBatch:
    if quad is None:
        quad = default_rule(space)
    kind = space.kind
    if kind in (SpaceKind.Q1_SCALAR, SpaceKind.Q1_VECTOR2):
        x, w, phi, grad = quad_geometry(mesh, quad)
        ne, nq = w.shape
        phi_e = np.broadcast_to(phi[None, :, :], (ne, nq, 4))
        if kind == SpaceKind.Q1_SCALAR:
            return ElementBatch(x, w, phi_e, grad, space=space)
        # vector dofs: [x-component at 4 nodes, y-component at 4 nodes]
        vphi = np.zeros((ne, nq, 8, 2))
        vgrad = np.zeros((ne, nq, 8, 2, 2))
        for c in range(2):
            vphi[:, :, 4 * c : 4 * c + 4, c] = phi_e
            vgrad[:, :, 4 * c : 4 * c + 4, c, :] = grad
        return ElementBatch(x, w, vphi, vgrad, space=space)
    if kind in (SpaceKind.P1_1D, SpaceKind.P2_1D):
        x, w, h = segment_geometry(mesh, quad)
        xi = quad.points[:, 0]
        if kind == SpaceKind.P1_1D:
            phi = np.stack([1 - xi, xi], axis=1)
            dphi = np.stack([-np.ones_like(xi), np.ones_like(xi)], axis=1)
        else:
            phi, dphi = p2_ref_basis(xi)
        ne, nq = w.shape
        nloc = phi.shape[1]
        phi_e = np.broadcast_to(phi[None], (ne, nq, nloc))
        grad = (dphi[None, :, :] / h[:, None, None])[..., None]
        return ElementBatch(x, w, phi_e, np.broadcast_to(grad, (ne, nq, nloc, 1)), space=space)
    if kind == SpaceKind.MORLEY:
        return morley_batch(mesh, quad)
    raise ValueError(kind)


def mass_density(batch: ElementBatch) -> np.ndarray:
    if batch.phi.ndim == 4:
        return np.einsum("eq,eqic,eqjc->eij", batch.w, batch.phi, batch.phi)
    return np.einsum("eq,eqi,eqj->eij", batch.w, batch.phi, batch.phi)


def stiffness_density(batch: ElementBatch) -> np.ndarray:
    if batch.grad.ndim == 5:
        return np.einsum("eq,eqicd,eqjcd->eij", batch.w, batch.grad, batch.grad)
    return np.einsum("eq,eqid,eqjd->eij", batch.w, batch.grad, batch.grad)


def assemble_from_local(dofmap: DofMap, local: np.ndarray) -> SparseSymMatrix:
    """Scatter symmetric per-element matrices; constrained rows/cols dropped."""
    local = 0.5 * (local + np.transpose(local, (0, 2, 1)))
    f2f = dofmap.full_to_free()
    gi = f2f[dofmap.element_to_global]  # (ne, nloc)
    rows = np.repeat(gi[:, :, None], gi.shape[1], axis=2).ravel()
    cols = np.repeat(gi[:, None, :], gi.shape[1], axis=1).ravel()
    vals = local.ravel()
    keep = (rows >= cols) & (cols >= 0)
    return SparseSymMatrix.from_entries(dofmap.n_free, rows[keep], cols[keep], vals[keep])


def assemble(mesh: Mesh, dofmap: DofMap, density, quad: QuadratureRule = None, space: ElementSpace = None) -> SparseSymMatrix:
    """Assemble sum over elements of the (symmetric) bilinear density."""
    if space is None:
        space = _infer_space(mesh, dofmap)
    batch = element_batch(mesh, space, quad)
    local = np.asarray(density(batch))
    bad = np.nonzero(~np.all(np.isfinite(local.reshape(len(local), -1)), axis=1))[0]
    if len(bad):
        raise AssemblyError(int(bad[0]), "density evaluated to a non-finite value")
    return assemble_from_local(dofmap, local)


def assemble_load_from_local(dofmap: DofMap, local: np.ndarray) -> np.ndarray:
    """Scatter per-element load vectors (ne, nloc) into the free dofs."""
    f2f = dofmap.full_to_free()
    gi = f2f[dofmap.element_to_global].ravel()
    keep = gi >= 0
    load = np.zeros(dofmap.n_free)
    np.add.at(load, gi[keep], local.ravel()[keep])
    return load


def assemble_load(mesh: Mesh, dofmap: DofMap, f, quad: QuadratureRule = None, space: ElementSpace = None) -> np.ndarray:
    """Load vector of a scalar source: integral of f phi_i over free dofs."""
    if space is None:
        space = _infer_space(mesh, dofmap)
    batch = element_batch(mesh, space, quad)
    fx = f(batch.x) if callable(f) else np.full(batch.w.shape, float(f))
    local = np.einsum("eq,eq,eqi->ei", batch.w, fx, batch.phi)
    return assemble_load_from_local(dofmap, local)


def _infer_space(mesh: Mesh, dofmap: DofMap) -> ElementSpace:
    nloc = dofmap.element_to_global.shape[1]
    table = {
        (ElementKind.QUAD4, 4): SpaceKind.Q1_SCALAR,
        (ElementKind.QUAD4, 8): SpaceKind.Q1_VECTOR2,
        (ElementKind.SEGMENT, 2): SpaceKind.P1_1D,
        (ElementKind.SEGMENT, 3): SpaceKind.P2_1D,
        (ElementKind.TRI3, 6): SpaceKind.MORLEY,
    }
    key = (mesh.element_kind, nloc)
    if key not in table:
        raise ValueError("cannot infer element space; pass it explicitly")
    return ElementSpace(table[key])
