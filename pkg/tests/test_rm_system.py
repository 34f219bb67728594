import numpy as np
import pytest
from numpy.testing import assert_allclose

from rmplates import (
    BcFamily,
    MaterialParams,
    assemble_rm_pencil,
    build_rect_mesh,
    build_thin_mesh,
    interpolate_pair,
    kernel_count,
    lame_coefficients,
    rigid_pair,
    solve_rm_source,
)
from rmplates.eigensolve import EigOptions, solve_gep_smallest
from rmplates.errors import SingularSystemError, UnsupportedConfigurationError
from rmplates.geometry import Mesh, PiecewiseLinear, ThinDomainSpec
from rmplates.rm_system import rm_form_parts

PARAMS = MaterialParams(E=1.0, sigma=0.3, k=5.0 / 6.0, t=0.1)


class TestMaterial:
    def test_lame_zero_poisson(self):
        assert lame_coefficients(MaterialParams(E=1.0, sigma=0.0)) == (0.5, 0.0)

    def test_lame_substitution(self):
        mu1, mu2 = lame_coefficients(MaterialParams(E=12.0, sigma=0.5))
        assert_allclose([mu1, mu2], [4.0, 4.0], atol=1e-14)

    def test_lame_sum_identity(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            E = float(rng.uniform(0.1, 100.0))
            sigma = float(rng.uniform(-0.9, 0.9))
            p = MaterialParams(E=E, sigma=sigma)
            mu1, mu2 = lame_coefficients(p)
            assert_allclose(mu1 + mu2, E / (2 * (1 - sigma**2)), rtol=1e-14)

    @pytest.mark.parametrize(
        "kwargs", [dict(E=-1, sigma=0.3), dict(E=1, sigma=1.0), dict(E=1, sigma=-1.0), dict(E=1, sigma=0.3, t=0.0)]
    )
    def test_invalid_params(self, kwargs):
        with pytest.raises(ValueError):
            MaterialParams(**kwargs)


class TestPencil:
    def test_rigid_pair_is_unit_eigenvector(self):
        mesh = build_rect_mesh(1, 1, 5, 4)
        pen = assemble_rm_pencil(mesh, PARAMS, BcFamily.FREE, shifted=True)
        for a, b in [((1.0, 0.0), 0.0), ((0.3, -0.2), 0.7), ((0.0, 0.0), 1.0)]:
            x = rigid_pair(mesh, a, b).concat()
            r = pen.A.full() @ x - pen.B.full() @ x
            assert np.abs(r).max() < 1e-12 * max(1.0, np.abs(x).max())

    def test_hard_clamped_constraint_count(self):
        mesh = build_rect_mesh(1, 1, 6, 6)
        pen = assemble_rm_pencil(mesh, PARAMS, BcFamily.HARD_CLAMPED)
        boundary_nodes = {n for f in mesh.facets for n in f.nodes}
        n_constr = len(pen.dof_layout["beta_constrained"]) + len(pen.dof_layout["w_constrained"])
        assert n_constr == 3 * len(boundary_nodes)

    def test_rigid_rotation_kills_bending(self):
        mesh = build_rect_mesh(1, 1, 6, 5)
        bend, shear, mass = rm_form_parts(mesh, PARAMS)
        pair = interpolate_pair(mesh, lambda x: np.stack([x[:, 1], -x[:, 0]], axis=-1), lambda x: np.zeros(len(x)))
        x = pair.concat()
        scale = x @ (mass.full() @ x)
        assert x @ (bend.full() @ x) < 1e-12 * scale

    def test_shifted_pencil_definite(self):
        mesh = build_rect_mesh(1, 1, 8, 8)
        for bc in (BcFamily.FREE, BcFamily.HARD_CLAMPED, BcFamily.SOFT_RIGID):
            pen = assemble_rm_pencil(mesh, PARAMS, bc)
            res = solve_gep_smallest(pen.A, pen.B, EigOptions(k=1))
            assert res.eigenvalues[0] >= 1.0 - 1e-10

    def test_bc_monotonicity(self):
        # growing trial spaces push the Rayleigh minima down
        mesh = build_rect_mesh(1, 1, 8, 8)
        eigs = {}
        for bc in (BcFamily.HARD_CLAMPED, BcFamily.SOFT_CLAMPED, BcFamily.FREE):
            pen = assemble_rm_pencil(mesh, PARAMS, bc)
            eigs[bc] = solve_gep_smallest(pen.A, pen.B, EigOptions(k=4)).eigenvalues
        assert np.all(eigs[BcFamily.HARD_CLAMPED] >= eigs[BcFamily.SOFT_CLAMPED] - 1e-10)
        assert np.all(eigs[BcFamily.SOFT_CLAMPED] >= eigs[BcFamily.FREE] - 1e-10)

    def test_translation_invariance(self):
        mesh = build_rect_mesh(1, 1, 6, 6)
        nodes = mesh.nodes.copy()
        nodes += np.array([137.2, -55.9])
        moved = Mesh(2, mesh.element_kind, nodes, mesh.elements.copy(), mesh.facets, meta=dict(mesh.meta))
        lam0 = solve_gep_smallest(*_pencil_mats(mesh, BcFamily.HARD_CLAMPED), EigOptions(k=3)).eigenvalues
        lam1 = solve_gep_smallest(*_pencil_mats(moved, BcFamily.HARD_CLAMPED), EigOptions(k=3)).eigenvalues
        assert_allclose(lam0, lam1, rtol=1e-9)

    def test_reduced_shear_exact_on_gradient_pairs(self):
        # w bilinear, beta = grad w evaluated exactly: the shear energy of
        # the pair vanishes pointwise, so under any of the reduced rules
        mesh = build_rect_mesh(1.0, 1.0, 1, 1)
        _, shear, _ = rm_form_parts(mesh, PARAMS)
        pair = interpolate_pair(
            mesh,
            lambda x: np.stack([x[:, 1], x[:, 0]], axis=-1),  # grad(xy)
            lambda x: x[:, 0] * x[:, 1],
        )
        x = pair.concat()
        assert abs(x @ (shear.full() @ x)) < 1e-12

    def test_non_axis_aligned_trace_rejected(self):
        spec = ThinDomainSpec(
            (0.0, 1.0),
            PiecewiseLinear.constant(0.5, 0, 1),
            PiecewiseLinear(np.array([0.0, 1.0]), np.array([0.5, 1.0])),
            0.3,
        )
        mesh = build_thin_mesh(spec, 4, 2)
        with pytest.raises(UnsupportedConfigurationError):
            assemble_rm_pencil(mesh, PARAMS, BcFamily.SOFT_CLAMPED)


class TestSimplySupportedClosedForm:
    """Hard simply supported square against the separable closed form.

    Modes (beta, w) = (A grad phi, B phi) with phi = sin(m pi x) sin(n pi y)
    satisfy the tangential trace and the natural conditions exactly, so each
    Laplace eigenvalue kappa = pi^2 (m^2 + n^2) contributes the two roots of
    a 2x2 pencil coupling bending, shear and the weighted masses.  The
    rotational branches lie above the first handful of these.
    """

    @staticmethod
    def analytic_eigenvalues(params, how_many=6, modes=6):
        import scipy.linalg

        Dp = params.bending_factor
        S = params.shear_factor
        t2_12 = params.t**2 / 12.0
        values = []
        for m in range(1, modes):
            for n in range(1, modes):
                kappa = np.pi**2 * (m * m + n * n)
                K = np.array([[Dp * kappa**2 + S * kappa, -S * kappa], [-S * kappa, S * kappa]])
                M = np.diag([t2_12 * kappa, 1.0])
                values.extend(scipy.linalg.eigh(K, M, eigvals_only=True))
        return np.sort(values)[:how_many] + 1.0  # shifted pencil

    def test_discrete_spectrum_matches_oracle(self):
        from rmplates.eigensolve import EigOptions, solve_gep_smallest

        exact = self.analytic_eigenvalues(PARAMS, how_many=4)
        lam = {}
        for n in (32, 64):
            mesh = build_rect_mesh(1, 1, n, n)
            pen = assemble_rm_pencil(mesh, PARAMS, BcFamily.HARD_SIMPLY_SUPPORTED)
            res = solve_gep_smallest(pen.A, pen.B, EigOptions(k=4, tol=1e-8))
            lam[n] = res.eigenvalues
        richardson = lam[64] + (lam[64] - lam[32]) / 3.0
        assert_allclose(richardson, exact, rtol=1e-3)
        # the (1,2)/(2,1) pair stays an exact double eigenvalue discretely
        assert abs(lam[64][1] - lam[64][2]) <= 1e-8 * lam[64][1]

    def test_oracle_holds_at_other_thickness(self):
        from rmplates.eigensolve import EigOptions, solve_gep_smallest

        params = MaterialParams(E=2.0, sigma=0.2, k=1.0, t=0.2)
        exact = self.analytic_eigenvalues(params, how_many=3)
        mesh = build_rect_mesh(1, 1, 32, 32)
        pen = assemble_rm_pencil(mesh, params, BcFamily.HARD_SIMPLY_SUPPORTED)
        res = solve_gep_smallest(pen.A, pen.B, EigOptions(k=3, tol=1e-8))
        assert_allclose(res.eigenvalues, exact, rtol=0.01)


class TestKernels:
    EXPECTED = {
        BcFamily.FREE: 3,
        BcFamily.HARD_RIGID: 1,
        BcFamily.SOFT_RIGID: 1,
        BcFamily.WEAK_NEUMANN: 1,
        BcFamily.HARD_CLAMPED: 0,
        BcFamily.SOFT_CLAMPED: 0,
        BcFamily.HARD_SIMPLY_SUPPORTED: 0,
        BcFamily.SOFT_SIMPLY_SUPPORTED: 0,
    }

    @pytest.mark.parametrize("bc", list(BcFamily))
    def test_kernel_dimensions(self, bc):
        mesh = build_rect_mesh(1, 1, 6, 6)
        pen = assemble_rm_pencil(mesh, PARAMS, bc)
        assert kernel_count(pen) == self.EXPECTED[bc]

    def test_kernel_dimensions_parameter_independent(self):
        # the kernel is a property of the trace constraints, not the material
        mesh = build_rect_mesh(1, 1, 5, 5)
        for params in (
            MaterialParams(E=3.0, sigma=-0.4, k=1.2, t=0.3),
            MaterialParams(E=0.5, sigma=0.7, k=0.5, t=0.02),
        ):
            for bc in (BcFamily.FREE, BcFamily.SOFT_RIGID, BcFamily.SOFT_CLAMPED):
                pen = assemble_rm_pencil(mesh, params, bc)
                assert kernel_count(pen) == self.EXPECTED[bc]

    def test_unshifted_pencil_rejected(self):
        mesh = build_rect_mesh(1, 1, 4, 4)
        pen = assemble_rm_pencil(mesh, PARAMS, BcFamily.FREE, shifted=False)
        with pytest.raises(ValueError):
            kernel_count(pen)


class TestSourceSolve:
    def test_constant_data_fixed_point(self):
        mesh = build_rect_mesh(1, 1, 6, 5)
        pen = assemble_rm_pencil(mesh, PARAMS, BcFamily.FREE)
        sol = solve_rm_source(pen, np.zeros(2 * mesh.n_nodes), np.ones(mesh.n_nodes))
        assert np.abs(sol.beta).max() < 1e-10
        assert_allclose(sol.w, np.ones(mesh.n_nodes), atol=1e-10)

    def test_rigid_data_fixed_point(self):
        mesh = build_rect_mesh(1, 1, 6, 5)
        pen = assemble_rm_pencil(mesh, PARAMS, BcFamily.FREE)
        pair = rigid_pair(mesh, (0.4, -1.1), 0.25)
        sol = solve_rm_source(pen, pair.beta, pair.w)
        assert_allclose(sol.beta, pair.beta, atol=1e-10)
        assert_allclose(sol.w, pair.w, atol=1e-10)

    def test_unshifted_solve_rejected(self):
        mesh = build_rect_mesh(1, 1, 4, 4)
        pen = assemble_rm_pencil(mesh, PARAMS, BcFamily.FREE, shifted=False)
        with pytest.raises(SingularSystemError):
            solve_rm_source(pen, np.zeros(2 * mesh.n_nodes), np.ones(mesh.n_nodes))

    def test_clamped_deflection_close_to_kirchhoff(self):
        # RM at small t against the Morley limit solve on the same grid
        from rmplates import LimitBc, assemble_biharmonic_pencil, solve_biharmonic_source, split_quads
        from rmplates.biharmonic import vertex_values

        n = 32
        mesh = build_rect_mesh(1, 1, n, n)
        params = MaterialParams(E=1.0, sigma=0.3, k=5.0 / 6.0, t=0.05)
        pen = assemble_rm_pencil(mesh, params, BcFamily.HARD_CLAMPED)
        sol = solve_rm_source(pen, np.zeros(2 * mesh.n_nodes), np.ones(mesh.n_nodes))

        tri = split_quads(mesh)
        bpen = assemble_biharmonic_pencil(tri, 1.0, 0.3, LimitBc.CLAMPED)
        u = solve_biharmonic_source(bpen, 1.0)
        w_kl = vertex_values(tri, u)
        assert abs(sol.w.max() - w_kl.max()) / w_kl.max() < 0.05


def _pencil_mats(mesh, bc):
    pen = assemble_rm_pencil(mesh, PARAMS, bc)
    return pen.A, pen.B
