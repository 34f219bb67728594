"""The Reissner-Mindlin pencil with all eight boundary-condition families.

The plate is described by a rotation field beta (Q1 vector) and a transverse
displacement w (Q1 scalar).  The bilinear form is

    a(beta, eta) + E k / (2 (1+sigma) t^2) * (grad w - beta, grad v - eta)

with the elastic form

    a(beta, eta) = E / (12 (1-sigma^2)) *
                   integral( (1-sigma) eps(beta):eps(eta) + sigma div beta div eta ),

against the weighted mass  (w, v) + t^2/12 (beta, eta).  The shifted pencil
adds the mass to the form, moving the rigid-pair kernel (beta, w) =
(a, a.x + b) to the exact eigenvalue 1.

Shear locking is mitigated by reduced integration of the shear energy, with
the x-component sampled on the element midline xi = 0 and the y-component on
eta = 0; the bending and mass terms use full 2x2 Gauss.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse.linalg as spla

from .assemble import SparseSymMatrix, assemble_from_local, element_batch
from .errors import SingularSystemError, UnsupportedConfigurationError
from .geometry import ElementKind, Mesh
from .quadrature import quad_rule, shear_rule_x, shear_rule_y
from .spaces import Q1_SCALAR, Q1_VECTOR2, DofMap, build_dofmap, stack_dofmaps
from .eigensolve import EigOptions, solve_gep_smallest

_AXIS_TOL = 1e-9


@dataclass(frozen=True)
class MaterialParams:
    """Young modulus E, Poisson ratio sigma, shear correction k, thickness t."""

    E: float
    sigma: float
    k: float = 5.0 / 6.0
    t: float = 0.1
    N: int = 2  # space dimension; bounds the admissible Poisson interval

    def __post_init__(self):
        if self.E <= 0:
            raise ValueError("E must be positive")
        lo = -1.0 / (self.N - 1)
        if not lo < self.sigma < 1.0:
            raise ValueError(f"sigma must lie strictly in ({lo}, 1)")
        if self.k <= 0 or self.t <= 0:
            raise ValueError("k and t must be positive")

    @property
    def bending_factor(self) -> float:
        return self.E / (12.0 * (1.0 - self.sigma**2))

    @property
    def shear_factor(self) -> float:
        return self.E * self.k / (2.0 * (1.0 + self.sigma) * self.t**2)


def lame_coefficients(params: MaterialParams):
    """mu1 = E / (2(1+sigma)),  mu2 = sigma E / (2(1-sigma^2))."""
    mu1 = params.E / (2.0 * (1.0 + params.sigma))
    mu2 = params.sigma * params.E / (2.0 * (1.0 - params.sigma**2))
    return mu1, mu2


class BcFamily(str, Enum):
    HARD_CLAMPED = "hard_clamped"
    SOFT_CLAMPED = "soft_clamped"
    HARD_SIMPLY_SUPPORTED = "hard_simply_supported"
    SOFT_SIMPLY_SUPPORTED = "soft_simply_supported"
    FREE = "free"
    HARD_RIGID = "hard_rigid"
    SOFT_RIGID = "soft_rigid"
    WEAK_NEUMANN = "weak_neumann"


# essential trace of the rotation field per family
_BETA_TRACE = {
    BcFamily.HARD_CLAMPED: "full",
    BcFamily.SOFT_CLAMPED: "normal",
    BcFamily.HARD_SIMPLY_SUPPORTED: "tangential",
    BcFamily.SOFT_SIMPLY_SUPPORTED: None,
    BcFamily.FREE: None,
    BcFamily.HARD_RIGID: "full",
    BcFamily.SOFT_RIGID: "normal",
    BcFamily.WEAK_NEUMANN: "tangential",
}
_W_ZERO = {
    BcFamily.HARD_CLAMPED,
    BcFamily.SOFT_CLAMPED,
    BcFamily.HARD_SIMPLY_SUPPORTED,
    BcFamily.SOFT_SIMPLY_SUPPORTED,
}


def _axis_component(normal: np.ndarray) -> int:
    c = int(np.argmax(np.abs(normal)))
    if abs(abs(normal[c]) - 1.0) > _AXIS_TOL:
        raise UnsupportedConfigurationError(
            "normal/tangential traces need axis-aligned facets; got normal " f"{normal}"
        )
    return c


def beta_essential(bc: BcFamily):
    """Essential predicate for the rotation block, or None."""
    trace = _BETA_TRACE[bc]
    if trace is None:
        return None
    if trace == "full":
        return lambda tag, comp, normal: True

    def pred(tag, comp, normal):
        c = _axis_component(normal)
        return comp == c if trace == "normal" else comp != c

    return pred


def w_essential(bc: BcFamily):
    if bc in _W_ZERO:
        return lambda tag, comp, normal: True
    return None


@dataclass
class Pencil:
    """Matrices (A, B) over the free dofs plus the block layout.

    Layout: rotation block first ([beta_x nodes, beta_y nodes]), then the
    displacement block.  B is the weighted mass;  A additionally contains the
    mass when `shifted`, which makes it positive definite for every family.
    """

    A: SparseSymMatrix
    B: SparseSymMatrix
    dof_layout: dict
    mesh: Mesh = None
    params: MaterialParams = None
    bc: BcFamily = None
    shifted: bool = True
    dofmap: DofMap = None
    B_full: SparseSymMatrix = field(default=None, repr=False)

    @property
    def n_beta(self) -> int:
        return self.dof_layout["n_beta"]

    @property
    def n_w(self) -> int:
        return self.dof_layout["n_w"]

    def split(self, full_vector: np.ndarray):
        return full_vector[: self.n_beta], full_vector[self.n_beta :]


@dataclass
class FieldPair:
    """Coefficient vectors of (beta, w) over the full (unconstrained) dofs."""

    beta: np.ndarray
    w: np.ndarray

    def concat(self) -> np.ndarray:
        return np.concatenate([self.beta, self.w])


def rm_local_matrices(mesh: Mesh, params: MaterialParams):
    """Per-element 12x12 blocks (bending, shear, mass) over the local dofs
    [beta_x(4), beta_y(4), w(4)]."""
    full = quad_rule(2)
    vb = element_batch(mesh, Q1_VECTOR2, full)
    sb = element_batch(mesh, Q1_SCALAR, full)
    ne = vb.w.shape[0]

    # bending: (1-s) eps:eps + s div div on the beta block
    eps = 0.5 * (vb.grad + np.swapaxes(vb.grad, -1, -2))  # (ne,nq,8,2,2)
    div = vb.grad[..., 0, 0] + vb.grad[..., 1, 1]  # (ne,nq,8)
    sig = params.sigma
    bend_beta = params.bending_factor * (
        (1.0 - sig) * np.einsum("eq,eqicd,eqjcd->eij", vb.w, eps, eps)
        + sig * np.einsum("eq,eqi,eqj->eij", vb.w, div, div)
    )
    bend = np.zeros((ne, 12, 12))
    bend[:, :8, :8] = bend_beta

    # mass: w v + t^2/12 beta.eta
    t2_12 = params.t**2 / 12.0
    mass = np.zeros((ne, 12, 12))
    mass[:, :8, :8] = t2_12 * np.einsum("eq,eqic,eqjc->eij", vb.w, vb.phi, vb.phi)
    mass[:, 8:, 8:] = np.einsum("eq,eqi,eqj->eij", sb.w, sb.phi, sb.phi)

    # reduced-integration shear, one component per midline rule
    shear = np.zeros((ne, 12, 12))
    for rule, comp in ((shear_rule_x(), 0), (shear_rule_y(), 1)):
        vbs = element_batch(mesh, Q1_VECTOR2, rule)
        sbs = element_batch(mesh, Q1_SCALAR, rule)
        gam = np.zeros(vbs.w.shape + (12,))
        gam[..., :8] = -vbs.phi[..., comp]
        gam[..., 8:] = sbs.grad[..., comp]
        shear += np.einsum("eq,eqi,eqj->eij", vbs.w, gam, gam)
    shear *= params.shear_factor
    return bend, shear, mass


def rm_form_parts(mesh: Mesh, params: MaterialParams):
    """Assembled (bending, shear, mass) over the unconstrained product space."""
    dofmap = stack_dofmaps([build_dofmap(mesh, Q1_VECTOR2), build_dofmap(mesh, Q1_SCALAR)])
    return tuple(assemble_from_local(dofmap, loc) for loc in rm_local_matrices(mesh, params))


def assemble_rm_pencil(mesh: Mesh, params: MaterialParams, bc: BcFamily, shifted: bool = True) -> Pencil:
    """Assemble the (shifted) Reissner-Mindlin pencil for one BC family."""
    if mesh.element_kind != ElementKind.QUAD4 or mesh.dim != 2:
        raise ValueError("the plate system needs a 2D quad mesh")
    bc = BcFamily(bc)
    beta_map = build_dofmap(mesh, Q1_VECTOR2, beta_essential(bc))
    w_map = build_dofmap(mesh, Q1_SCALAR, w_essential(bc))
    combined = stack_dofmaps([beta_map, w_map])
    unconstrained = stack_dofmaps(
        [build_dofmap(mesh, Q1_VECTOR2), build_dofmap(mesh, Q1_SCALAR)]
    )

    bend_loc, shear_loc, M_loc = rm_local_matrices(mesh, params)
    A_loc = bend_loc + shear_loc
    if shifted:
        A_loc = A_loc + M_loc
    A = assemble_from_local(combined, A_loc)
    B = assemble_from_local(combined, M_loc)
    B_full = assemble_from_local(unconstrained, M_loc)
    layout = {
        "n_beta": beta_map.n_dofs,
        "n_w": w_map.n_dofs,
        "beta_constrained": beta_map.constrained,
        "w_constrained": w_map.constrained,
    }
    return Pencil(A, B, layout, mesh=mesh, params=params, bc=bc, shifted=shifted, dofmap=combined, B_full=B_full)


def interpolate_pair(mesh: Mesh, beta_fn, w_fn) -> FieldPair:
    """Nodal interpolant of callable fields (beta_fn maps (n,2)->(n,2))."""
    x = mesh.nodes
    beta = np.asarray(beta_fn(x))
    w = np.asarray(w_fn(x))
    return FieldPair(np.concatenate([beta[:, 0], beta[:, 1]]), w)


def rigid_pair(mesh: Mesh, a, b: float) -> FieldPair:
    """The kernel pair beta = a, w = a.x + b."""
    a = np.asarray(a, dtype=float)
    return interpolate_pair(mesh, lambda x: np.broadcast_to(a, x.shape).copy(), lambda x: x @ a + b)


def rm_load_vector(pencil: Pencil, F, f) -> np.ndarray:
    """Reduced load with the weighting (t^2/12 F, f).

    F, f are full-length coefficient vectors of interpolants (F as the
    concatenated rotation block), or callables evaluated at quadrature
    points for exact data.
    """
    mesh = pencil.mesh
    if callable(F) or callable(f):
        full = quad_rule(3)
        vb = element_batch(mesh, Q1_VECTOR2, full)
        sb = element_batch(mesh, Q1_SCALAR, full)
        Fx = F(vb.x) if callable(F) else _interp_vec(pencil, F, vb)
        fx = f(sb.x) if callable(f) else _interp_scal(pencil, f, sb)
        t2_12 = pencil.params.t**2 / 12.0
        loc = np.zeros((vb.w.shape[0], 12))
        loc[:, :8] = t2_12 * np.einsum("eq,eqc,eqic->ei", vb.w, Fx, vb.phi)
        loc[:, 8:] = np.einsum("eq,eq,eqi->ei", sb.w, fx, sb.phi)
        from .assemble import assemble_load_from_local

        return assemble_load_from_local(pencil.dofmap, loc)
    data = np.concatenate([np.asarray(F, dtype=float), np.asarray(f, dtype=float)])
    return (pencil.B_full.full() @ data)[pencil.dofmap.free]


def _interp_vec(pencil, F, vb):
    nv = pencil.mesh.n_nodes
    coeffs = np.asarray(F)
    vals = np.stack([coeffs[:nv][pencil.mesh.elements], coeffs[nv:][pencil.mesh.elements]], axis=-1)
    return np.einsum("eqi,eic->eqc", vb.phi[..., :4, 0], vals)


def _interp_scal(pencil, f, sb):
    vals = np.asarray(f)[pencil.mesh.elements]
    return np.einsum("eqi,ei->eq", sb.phi, vals)


def sparse_solve(A_full, load: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Sparse LU solve with symmetric diagonal scaling and refinement.

    Jacobi scaling evens out the very different block magnitudes (the
    rotation mass carries t^2/12), which keeps forward errors near machine
    precision; the residual contract is backward-error style,
    ||A x - b|| / (||A|| ||x|| + ||b||) <= rtol.
    """
    import scipy.sparse as sp

    d = A_full.diagonal()
    if np.any(d <= 0):
        raise SingularSystemError("non-positive diagonal; system is not definite")
    s = 1.0 / np.sqrt(d)
    S = sp.diags(s)
    As = (S @ A_full @ S).tocsc()
    bs = s * load
    try:
        lu = spla.splu(As)
    except RuntimeError as exc:
        raise SingularSystemError(str(exc))
    y = lu.solve(bs)
    normA = spla.norm(As, np.inf)

    # extended-precision residuals push the forward error of well-scaled
    # systems to machine level instead of stagnating at kappa * eps
    coo = As.tocoo()
    bs_l = bs.astype(np.longdouble)

    data_l = coo.data.astype(np.longdouble)

    def residual(v):
        # np.add.at keeps the accumulation in extended precision, which
        # bincount and sparse matvecs would silently downcast
        prod = np.zeros(len(bs_l), dtype=np.longdouble)
        np.add.at(prod, coo.row, data_l * v[coo.col])
        return bs_l - prod

    def backward_error(v, r):
        scale = normA * np.linalg.norm(v) + np.linalg.norm(bs)
        return float(np.linalg.norm(r.astype(np.float64)) / max(scale, 1e-300))

    for _ in range(8):
        r = residual(y.astype(np.longdouble))
        dy = lu.solve(r.astype(np.float64))
        if np.linalg.norm(dy) <= 1e-16 * np.linalg.norm(y):
            break
        y = y + dy
    if backward_error(y, residual(y.astype(np.longdouble))) > max(rtol, 1e-13):
        raise SingularSystemError("direct solve residual above tolerance after refinement")
    return s * y


def solve_rm_source(pencil: Pencil, F, f) -> FieldPair:
    """Solve the shifted source problem with data (t^2/12 F, f)."""
    if not pencil.shifted:
        raise SingularSystemError("source solves need the shifted (definite) pencil")
    load = rm_load_vector(pencil, F, f)
    x = sparse_solve(pencil.A.full(), load)
    full = pencil.dofmap.expand(x)
    beta, w = pencil.split(full)
    return FieldPair(beta, w)


def kernel_count(pencil: Pencil, tol: float = 1e-8, k: int = 6) -> int:
    """Number of eigenvalues of the shifted pencil within tol of 1."""
    if not pencil.shifted:
        raise ValueError("kernel counting is defined on the shifted pencil")
    res = solve_gep_smallest(pencil.A, pencil.B, EigOptions(k=min(k, pencil.A.n)))
    count = int(np.sum(np.abs(res.eigenvalues - 1.0) <= tol))
    if count == len(res.eigenvalues):
        return kernel_count(pencil, tol, k=k + 4)
    return count
