"""Weighted dimension-reduced plate system on the interval, and the
connecting system that compares it with the thin-domain solution.

For a thin domain with section measure delta*g(x), the limit pencil acts on
pairs (Phi, phi) of P2 fields over the base interval:

    A = E/(12(1-sigma^2)) * integral[ ((1-sigma) + c_div(sigma,d)) Phi' Psi' ] g
        + E k/(2(1+sigma) t^2) * integral[ (phi' - Phi)(v' - Psi) ] g
        + B,
    B = integral[ phi v + t^2/12 Phi Psi ] g,

with natural boundary conditions, where

    c_div(sigma, d) = (1-sigma) sigma / ((1-sigma) + d sigma)

is the divergence coefficient surviving the thin-direction relaxation.  The
connecting system carries the extension (constant in the thin variable, zero
thin components) and the section-average operator; its norms make

    || E_delta u0 ||_{H_delta} = || u0 ||_{H_0}

an exact identity at the quadrature level, because the section measure is
exactly delta * g(x).
"""

from dataclasses import dataclass

import numpy as np

from .assemble import SparseSymMatrix, assemble_from_local, element_batch
from .geometry import ElementKind, Mesh, ThinDomainSpec
from .quadrature import quad_rule_anisotropic, segment_rule
from .rm_system import FieldPair, MaterialParams, Pencil
from .spaces import P2_1D, Q1_SCALAR, Q1_VECTOR2, build_dofmap, stack_dofmaps


def limit_div_coefficient(sigma: float, d: int) -> float:
    """(1-sigma) sigma / ((1-sigma) + d sigma)."""
    if d < 1:
        raise ValueError("d must be a positive integer")
    den = (1.0 - sigma) + d * sigma
    if den <= 0:
        raise ValueError(f"degenerate divergence denominator for sigma={sigma}, d={d}")
    return (1.0 - sigma) * sigma / den


def qjj_value(sigma: float, d: int, divx_beta: float) -> float:
    """Diagonal thin-strain limit q_jj = -sigma div_x beta / ((1-sigma) + d sigma);
    the off-diagonal entries vanish."""
    den = (1.0 - sigma) + d * sigma
    if den <= 0:
        raise ValueError(f"degenerate denominator for sigma={sigma}, d={d}")
    return -sigma * divx_beta / den


def strong_divgrad_coefficient(E: float, sigma: float, d: int) -> float:
    """Grad-div coefficient of the strong-form limit operator,
    E (1 + (d+1) sigma) / (24 (1+sigma)(1 + (d-1) sigma))."""
    return E * (1.0 + (d + 1) * sigma) / (24.0 * (1.0 + sigma) * (1.0 + (d - 1) * sigma))


def divgrad_consistency_gap(E: float, sigma: float, d: int) -> float:
    """Difference between the strong-form grad-div coefficient and the one
    implied by the weak form via 2 eps:eps = |grad|^2 + div^2 (diagnostic,
    valid for constant section weight)."""
    weak = E / (24.0 * (1.0 + sigma)) + E / (12.0 * (1.0 - sigma**2)) * limit_div_coefficient(sigma, d)
    return strong_divgrad_coefficient(E, sigma, d) - weak


@dataclass
class LimitPencil:
    """P2 x P2 pencil on the interval; layout [Phi dofs, phi dofs]."""

    A: SparseSymMatrix
    B: SparseSymMatrix
    dof_layout: dict
    mesh: Mesh
    spec: ThinDomainSpec
    params: MaterialParams
    d: int
    g_samples: np.ndarray
    dofmap: object = None

    @property
    def n_Phi(self) -> int:
        return self.dof_layout["n_Phi"]

    def split(self, full_vector: np.ndarray):
        return full_vector[: self.n_Phi], full_vector[self.n_Phi :]


def p2_dof_points(interval_mesh: Mesh) -> np.ndarray:
    """x-positions of the P2 dofs: vertices, then element midpoints."""
    xs = interval_mesh.nodes[:, 0]
    mids = 0.5 * (xs[interval_mesh.elements[:, 0]] + xs[interval_mesh.elements[:, 1]])
    return np.concatenate([xs, mids])


def p2_evaluate(interval_mesh: Mesh, coeffs: np.ndarray, x) -> np.ndarray:
    """Evaluate a P2 coefficient vector at arbitrary points of the interval."""
    xs = interval_mesh.nodes[:, 0]
    nv = len(xs)
    x = np.asarray(x, dtype=float)
    idx = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(xs) - 2)
    xi = (x - xs[idx]) / (xs[idx + 1] - xs[idx])
    n0 = (1 - xi) * (1 - 2 * xi)
    n1 = xi * (2 * xi - 1)
    n2 = 4 * xi * (1 - xi)
    return n0 * coeffs[idx] + n1 * coeffs[idx + 1] + n2 * coeffs[nv + idx]


def p2_interpolate(interval_mesh: Mesh, fn) -> np.ndarray:
    return np.asarray(fn(p2_dof_points(interval_mesh)), dtype=float)


def limit_rigid_pair(interval_mesh: Mesh, a: float, b: float):
    """(Phi, phi) = (a, a x + b) as P2 coefficients (exact for affine data)."""
    pts = p2_dof_points(interval_mesh)
    return np.full_like(pts, float(a)), a * pts + b


def assemble_limit_pencil(
    interval_mesh: Mesh, spec: ThinDomainSpec, params: MaterialParams, d: int = None
) -> LimitPencil:
    """Assemble the weighted limit pencil from the reduced weak form."""
    if interval_mesh.element_kind != ElementKind.SEGMENT:
        raise ValueError("the limit pencil lives on an interval mesh")
    d = spec.d if d is None else d
    quad = segment_rule(3)
    batch = element_batch(interval_mesh, P2_1D, quad)
    gq = spec.g(batch.x[..., 0])
    if np.min(gq) <= 0:
        raise ValueError("section weight g must be strictly positive")

    phi = batch.phi  # (ne, nq, 3)
    dphi = batch.grad[..., 0]  # (ne, nq, 3)
    wg = batch.w * gq
    ne = phi.shape[0]
    sig = params.sigma
    c_bend = params.bending_factor * ((1.0 - sig) + limit_div_coefficient(sig, d))

    bend = np.zeros((ne, 6, 6))
    bend[:, :3, :3] = c_bend * np.einsum("eq,eqi,eqj->eij", wg, dphi, dphi)

    gam = np.zeros(phi.shape[:2] + (6,))
    gam[..., :3] = -phi
    gam[..., 3:] = dphi
    shear = params.shear_factor * np.einsum("eq,eqi,eqj->eij", wg, gam, gam)

    t2_12 = params.t**2 / 12.0
    mass = np.zeros((ne, 6, 6))
    mass[:, :3, :3] = t2_12 * np.einsum("eq,eqi,eqj->eij", wg, phi, phi)
    mass[:, 3:, 3:] = np.einsum("eq,eqi,eqj->eij", wg, phi, phi)

    dofmap = stack_dofmaps([build_dofmap(interval_mesh, P2_1D), build_dofmap(interval_mesh, P2_1D)])
    A = assemble_from_local(dofmap, bend + shear + mass)
    B = assemble_from_local(dofmap, mass)
    layout = {"n_Phi": dofmap.aux["offsets"][1], "n_phi": dofmap.n_dofs - dofmap.aux["offsets"][1]}
    return LimitPencil(A, B, layout, interval_mesh, spec, params, d, gq, dofmap=dofmap)


def solve_limit_source(pencil: LimitPencil, F_coeffs: np.ndarray, f_coeffs: np.ndarray):
    """Solve the shifted limit system with data (t^2/12 F, f) (g-weighted)."""
    from .rm_system import sparse_solve

    load = pencil.B.full() @ np.concatenate([F_coeffs, f_coeffs])
    x = sparse_solve(pencil.A.full(), load)
    return pencil.split(x)


class ConnectingSystem:
    """Couples a structured thin mesh with its base-interval mesh.

    The thin mesh must come from build_thin_mesh and the interval mesh must
    share its x grid; then every vertical line through the mesh sees a
    piecewise-linear restriction of Q1 fields, so section averages are exact
    column-wise quadratures.
    """

    def __init__(self, thin_mesh: Mesh, interval_mesh: Mesh, spec: ThinDomainSpec):
        if thin_mesh.meta.get("kind") != "thin":
            raise ValueError("need a mesh from build_thin_mesh")
        nx, ny = thin_mesh.meta["nx"], thin_mesh.meta["ny"]
        xs = thin_mesh.nodes[: nx + 1, 0]
        if interval_mesh.n_nodes != nx + 1 or not np.allclose(
            interval_mesh.nodes[:, 0], xs, rtol=0, atol=1e-12
        ):
            raise ValueError("interval mesh nodes must coincide with the thin-mesh x grid")
        self.thin_mesh = thin_mesh
        self.interval_mesh = interval_mesh
        self.spec = spec
        self.delta = spec.delta
        self.nx, self.ny = nx, ny
        self.xs = xs
        self.Y = thin_mesh.nodes[:, 1].reshape(ny + 1, nx + 1)
        # quadrature used for all thin-side norms: exact for products of Q1
        # fields and extensions of P2 interval fields
        self._batch = element_batch(thin_mesh, Q1_SCALAR, quad_rule_anisotropic(3, 2))
        self._ivl_rule = segment_rule(3)
        self._ivl_batch = element_batch(interval_mesh, P2_1D, self._ivl_rule)

    # -- pointwise column operations ------------------------------------
    def _column(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.xs, x, side="right") - 1, 0, self.nx - 1)
        xi = (x - self.xs[idx]) / (self.xs[idx + 1] - self.xs[idx])
        return idx, xi

    def section_integral(self, nodal: np.ndarray, x) -> np.ndarray:
        """Exact integral over the section {x} x (y_bottom, y_top) of the Q1
        interpolant with the given nodal values (grid shape implied)."""
        idx, xi = self._column(x)
        U = np.asarray(nodal).reshape(self.ny + 1, self.nx + 1)
        v = (1 - xi) * U[:, idx] + xi * U[:, idx + 1]  # (ny+1, len(x))
        y = (1 - xi) * self.Y[:, idx] + xi * self.Y[:, idx + 1]
        return np.sum(0.5 * (v[1:] + v[:-1]) * np.diff(y, axis=0), axis=0)

    def section_height(self, x) -> np.ndarray:
        idx, xi = self._column(x)
        y = (1 - xi) * self.Y[:, idx] + xi * self.Y[:, idx + 1]
        return y[-1] - y[0]

    def section_average(self, nodal: np.ndarray, x) -> np.ndarray:
        return self.section_integral(nodal, x) / self.section_height(x)

    def section_average_of_function(self, fn, x) -> np.ndarray:
        """Section average of a callable fn(x, y), by the same column-wise
        trapezoid quadrature used for Q1 fields (exact for fields linear in
        y per mesh row; reproduces y-constant functions identically)."""
        idx, xi = self._column(x)
        y = (1 - xi) * self.Y[:, idx] + xi * self.Y[:, idx + 1]
        v = np.array([fn(np.broadcast_to(x, yr.shape), yr) for yr in y])
        integral = np.sum(0.5 * (v[1:] + v[:-1]) * np.diff(y, axis=0), axis=0)
        return integral / (y[-1] - y[0])

    def g_mesh(self, x) -> np.ndarray:
        """Section weight implied by the mesh (equals spec.g up to profile
        resampling at the x grid)."""
        return self.section_height(x) / self.delta

    # -- averaging and extension -----------------------------------------
    def average_to_p2(self, nodal: np.ndarray) -> np.ndarray:
        """Section averages sampled at the P2 dof points of the interval mesh."""
        return self.section_average(nodal, p2_dof_points(self.interval_mesh))

    def average_pair(self, pair: FieldPair):
        """Componentwise averages of (beta, w): returns (Phi_bar, betaII_bar, phi_bar)."""
        nv = self.thin_mesh.n_nodes
        return (
            self.average_to_p2(pair.beta[:nv]),
            self.average_to_p2(pair.beta[nv:]),
            self.average_to_p2(pair.w),
        )

    def extend_nodal(self, Phi_coeffs: np.ndarray, phi_coeffs: np.ndarray) -> FieldPair:
        """Nodal Q1 interpolant of the extension (Phi(x), 0, phi(x))."""
        x = self.thin_mesh.nodes[:, 0]
        bx = p2_evaluate(self.interval_mesh, Phi_coeffs, x)
        w = p2_evaluate(self.interval_mesh, phi_coeffs, x)
        return FieldPair(np.concatenate([bx, np.zeros_like(bx)]), w)

    # -- quadrature-level fields ------------------------------------------
    def q1_at_rule(self, nodal: np.ndarray) -> np.ndarray:
        """Q1 field values at the thin-side norm quadrature points, (ne, nq)."""
        vals = np.asarray(nodal)[self.thin_mesh.elements]
        return np.einsum("eqi,ei->eq", self._batch.phi, vals)

    def p2x_at_rule(self, coeffs: np.ndarray) -> np.ndarray:
        """Extension of a P2 interval field, evaluated exactly at the same points."""
        xq = self._batch.x[..., 0]
        return p2_evaluate(self.interval_mesh, coeffs, xq.ravel()).reshape(xq.shape)

    def integrate_thin(self, vals: np.ndarray) -> float:
        return float(np.sum(self._batch.w * vals))

    def integrate_interval(self, vals: np.ndarray) -> float:
        return float(np.sum(self._ivl_batch.w * vals))

    # -- norms --------------------------------------------------------------
    def h0_norm(self, Phi_coeffs: np.ndarray, phi_coeffs: np.ndarray) -> float:
        """g-weighted L2 norm of an interval pair (mesh-implied g)."""
        xq = self._ivl_batch.x[..., 0]
        g = self.g_mesh(xq.ravel()).reshape(xq.shape)
        Phi = p2_evaluate(self.interval_mesh, Phi_coeffs, xq.ravel()).reshape(xq.shape)
        phi = p2_evaluate(self.interval_mesh, phi_coeffs, xq.ravel()).reshape(xq.shape)
        return float(np.sqrt(self.integrate_interval(g * (Phi**2 + phi**2))))

    def hdelta_norm_extended(self, Phi_coeffs: np.ndarray, phi_coeffs: np.ndarray) -> float:
        """H_delta norm of the exact extension E_delta(Phi, phi)."""
        Phi = self.p2x_at_rule(Phi_coeffs)
        phi = self.p2x_at_rule(phi_coeffs)
        val = self.integrate_thin(Phi**2 + phi**2) / self.delta
        return float(np.sqrt(val))

    def hdelta_gap_norm(
        self, pair: FieldPair, Phi_coeffs: np.ndarray, phi_coeffs: np.ndarray, scale_thin: bool = False
    ) -> float:
        """H_delta distance between a thin pair and an extended limit pair.

        By default all blocks are measured in the plain L2(delta^{-d}) norm
        of the connecting-system space.  `scale_thin` divides the thin
        rotation block by delta instead; that stronger norm does NOT vanish
        along the limit, because the transverse rotation approaches the
        strain-relaxation profile d(beta_y)/dy -> q_jj * y with q_jj =
        -sigma div Phi / ((1-sigma) + d sigma), so beta_y is exactly of
        order delta.  The scaled variant is reported as a diagnostic only.
        """
        nv = self.thin_mesh.n_nodes
        bI = self.q1_at_rule(pair.beta[:nv]) - self.p2x_at_rule(Phi_coeffs)
        bII = self.q1_at_rule(pair.beta[nv:])
        if scale_thin:
            bII = bII / self.delta
        wg = self.q1_at_rule(pair.w) - self.p2x_at_rule(phi_coeffs)
        val = self.integrate_thin(bI**2 + bII**2 + wg**2) / self.delta
        return float(np.sqrt(val))

    # -- adjoint identity, both sides by independent loops -----------------
    def adjoint_lhs(self, nodal: np.ndarray, p2_coeffs: np.ndarray) -> float:
        """integral over the interval of g * (M_delta u) * v."""
        xq = self._ivl_batch.x[..., 0]
        integrand = (
            self.section_integral(nodal, xq.ravel()).reshape(xq.shape) / self.delta
        ) * p2_evaluate(self.interval_mesh, p2_coeffs, xq.ravel()).reshape(xq.shape)
        return self.integrate_interval(integrand)

    def adjoint_rhs(self, nodal: np.ndarray, p2_coeffs: np.ndarray) -> float:
        """delta^{-d} integral over the thin domain of u * (E_delta v)."""
        u = self.q1_at_rule(nodal)
        v = self.p2x_at_rule(p2_coeffs)
        return self.integrate_thin(u * v) / self.delta


def extend_Edelta(Phi_coeffs: np.ndarray, phi_coeffs: np.ndarray, system: ConnectingSystem) -> FieldPair:
    """Constant-in-y extension with zero thin components, as nodal data."""
    return system.extend_nodal(Phi_coeffs, phi_coeffs)


def average_Mdelta(pair: FieldPair, system: ConnectingSystem):
    """Componentwise section average of a thin pair at the interval dofs."""
    return system.average_pair(pair)


def resolvent_gap(
    system: ConnectingSystem,
    params: MaterialParams,
    F0_coeffs: np.ndarray,
    f0_coeffs: np.ndarray,
    thin_pencil: Pencil = None,
    limit_pencil: LimitPencil = None,
    scale_thin: bool = False,
) -> float:
    """Relative H_delta distance between the thin resolvent applied to
    extended data and the extended limit resolvent.

    Both solves use the shifted operator and the (t^2/12 F, f) data
    convention; the extension is evaluated exactly at quadrature points when
    building the thin load.  See `hdelta_gap_norm` for `scale_thin`.
    """
    from .rm_system import BcFamily, assemble_rm_pencil, solve_rm_source

    if thin_pencil is None:
        thin_pencil = assemble_rm_pencil(system.thin_mesh, params, BcFamily.FREE, shifted=True)
    if limit_pencil is None:
        limit_pencil = assemble_limit_pencil(system.interval_mesh, system.spec, params)

    def F_thin(x):
        vals = p2_evaluate(system.interval_mesh, F0_coeffs, x[..., 0].ravel()).reshape(x.shape[:-1])
        return np.stack([vals, np.zeros_like(vals)], axis=-1)

    def f_thin(x):
        return p2_evaluate(system.interval_mesh, f0_coeffs, x[..., 0].ravel()).reshape(x.shape[:-1])

    pair = solve_rm_source(thin_pencil, F_thin, f_thin)
    Phi0, phi0 = solve_limit_source(limit_pencil, F0_coeffs, f0_coeffs)
    gap = system.hdelta_gap_norm(pair, Phi0, phi0, scale_thin=scale_thin)
    denom = system.h0_norm(F0_coeffs, f0_coeffs)
    if denom == 0:
        raise ValueError("data must be nonzero")
    return gap / denom


def plain_mass_matrix(mesh: Mesh) -> SparseSymMatrix:
    """Unweighted mass of the (beta, w) product space; backs the H_delta
    norm used in the energy coercivity bound."""
    vb = element_batch(mesh, Q1_VECTOR2)
    sb = element_batch(mesh, Q1_SCALAR)
    ne = vb.w.shape[0]
    loc = np.zeros((ne, 12, 12))
    loc[:, :8, :8] = np.einsum("eq,eqic,eqjc->eij", vb.w, vb.phi, vb.phi)
    loc[:, 8:, 8:] = np.einsum("eq,eqi,eqj->eij", sb.w, sb.phi, sb.phi)
    dofmap = stack_dofmaps([build_dofmap(mesh, Q1_VECTOR2), build_dofmap(mesh, Q1_SCALAR)])
    return assemble_from_local(dofmap, loc)


def energy_functional(
    pencil: Pencil,
    pair: FieldPair,
    F0_coeffs: np.ndarray = None,
    f0_coeffs: np.ndarray = None,
    system: ConnectingSystem = None,
    homogeneous: bool = False,
) -> float:
    """Thin-domain energy 1/2 a_shifted(pair, pair) - load(pair), times delta^{-d}.

    The load pairs the extension of (F0, f0) against the pair with the same
    (t^2/12 F, f) weighting as the source solve, so the solve is exactly the
    minimizer of this functional over the discrete space.  With
    `homogeneous`, the load term is dropped.
    """
    from .rm_system import rm_load_vector

    x = pencil.dofmap.restrict(pair.concat())
    d = system.spec.d if system is not None else 1
    delta = system.delta if system is not None else pencil.mesh.meta.get("delta", 1.0)
    val = 0.5 * float(x @ (pencil.A.full() @ x))
    if not homogeneous and f0_coeffs is not None:
        def F_thin(xq):
            vals = p2_evaluate(system.interval_mesh, F0_coeffs, xq[..., 0].ravel()).reshape(xq.shape[:-1])
            return np.stack([vals, np.zeros_like(vals)], axis=-1)

        def f_thin(xq):
            return p2_evaluate(system.interval_mesh, f0_coeffs, xq[..., 0].ravel()).reshape(xq.shape[:-1])

        load = rm_load_vector(pencil, F_thin, f_thin)
        val -= float(load @ x)
    return val / delta**d


def hdelta_plain_norm(pencil: Pencil, pair: FieldPair, delta: float, d: int = 1) -> float:
    """delta^{-d}-weighted L2 norm of a thin pair (no thin-block rescaling);
    this is the norm in the energy coercivity bound."""
    M = plain_mass_matrix(pencil.mesh)
    x = pair.concat()
    return float(np.sqrt((x @ (M.full() @ x)) / delta**d))
