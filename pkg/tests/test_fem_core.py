import io

import numpy as np
import pytest
from numpy.testing import assert_allclose

from rmplates import (
    MORLEY,
    P1_1D,
    P2_1D,
    Q1_SCALAR,
    Q1_VECTOR2,
    assemble,
    assemble_load,
    build_dofmap,
    build_interval_mesh,
    build_rect_mesh,
    element_batch,
    mass_density,
    split_quads,
    stiffness_density,
)
from rmplates.biharmonic import morley_interpolate
from rmplates.quadrature import (
    quad_center_rule,
    quad_rule,
    segment_rule,
    shear_rule_x,
    triangle_rule,
)


class TestQuadrature:
    @pytest.mark.parametrize(
        "rule,measure",
        [
            (segment_rule(2), 1.0),
            (segment_rule(3), 1.0),
            (quad_rule(2), 4.0),
            (quad_rule(3), 4.0),
            (quad_center_rule(), 4.0),
            (shear_rule_x(), 4.0),
            (triangle_rule(2), 0.5),
            (triangle_rule(4), 0.5),
        ],
    )
    def test_weights_sum_to_measure(self, rule, measure):
        assert abs(rule.weights.sum() - measure) < 1e-14
        assert np.all(rule.weights > 0)

    def test_triangle_rule_degree(self):
        # exact on x^a y^b up to the stated degree
        from math import factorial

        rule = triangle_rule(4)
        for a, b in [(0, 0), (1, 0), (2, 1), (2, 2), (4, 0)]:
            exact = factorial(a) * factorial(b) / factorial(a + b + 2)
            got = np.sum(rule.weights * rule.points[:, 0] ** a * rule.points[:, 1] ** b)
            assert_allclose(got, exact, rtol=1e-13)


class TestDofMaps:
    def test_dirichlet_scalar_counts(self):
        dm = build_dofmap(build_rect_mesh(1, 1, 2, 2), Q1_SCALAR, lambda t, c, n: True)
        assert dm.n_dofs == 9 and len(dm.constrained) == 8

    def test_normal_trace_constrains_normal_component(self):
        mesh = build_rect_mesh(2, 1, 4, 3)
        dm = build_dofmap(mesh, Q1_VECTOR2, lambda t, c, n: c == int(np.argmax(np.abs(n))))
        nv = mesh.n_nodes
        constrained = set(dm.constrained)
        axis_of = {}
        for f in mesh.facets:
            for node in f.nodes:
                axis_of.setdefault(node, set()).add(int(np.argmax(np.abs(f.normal))))
        corner = {n for n, axes in axis_of.items() if len(axes) > 1}
        for f in mesh.facets:
            comp = int(np.argmax(np.abs(f.normal)))
            for node in f.nodes:
                assert comp * nv + node in constrained
                # away from corners, the tangential component stays free
                if node not in corner:
                    assert (1 - comp) * nv + node not in constrained

    def test_bad_density_reports_element(self):
        from rmplates.errors import AssemblyError

        mesh = build_rect_mesh(1, 1, 3, 3)
        dm = build_dofmap(mesh, Q1_SCALAR)

        def bad(batch):
            loc = mass_density(batch)
            loc[5] = np.nan
            return loc

        with pytest.raises(AssemblyError) as err:
            assemble(mesh, dm, bad)
        assert err.value.element == 5

    def test_assembly_deterministic(self):
        mesh = build_rect_mesh(1.1, 0.9, 6, 5)
        dm = build_dofmap(mesh, Q1_SCALAR)
        a = assemble(mesh, dm, stiffness_density).toarray()
        b = assemble(mesh, dm, stiffness_density).toarray()
        assert np.array_equal(a, b)

    def test_no_essential_means_empty(self):
        dm = build_dofmap(build_rect_mesh(1, 1, 3, 3), Q1_VECTOR2)
        assert len(dm.constrained) == 0

    def test_incompatible_space_rejected(self):
        with pytest.raises(ValueError):
            build_dofmap(build_interval_mesh(0, 1, 2), Q1_SCALAR)

    def test_morley_dof_count(self):
        tri = split_quads(build_rect_mesh(1, 1, 2, 2))
        dm = build_dofmap(tri, MORLEY)
        n_edges = dm.n_dofs - tri.n_nodes
        # Euler: 9 vertices, 8 triangles, edges = 9 + 8 - 1 = 16
        assert n_edges == 16


class TestAssembly:
    def test_mass_partition_of_unity(self):
        mesh = build_rect_mesh(1, 1, 3, 3)
        dm = build_dofmap(mesh, Q1_SCALAR)
        M = assemble(mesh, dm, mass_density)
        row_sums = np.asarray(M.full().sum(axis=1)).ravel()
        load = assemble_load(mesh, dm, 1.0)
        assert_allclose(row_sums, load, atol=1e-14)
        assert_allclose(M.full().sum(), 1.0, atol=1e-12)

    def test_stiffness_kills_constants(self):
        mesh = build_rect_mesh(1, 1, 4, 3)
        dm = build_dofmap(mesh, Q1_SCALAR)
        K = assemble(mesh, dm, stiffness_density)
        assert np.abs(K.full() @ np.ones(dm.n_free)).max() < 1e-12

    def test_p1_mass_hand_integration(self):
        # (0,1) with two elements: hat-function overlaps give 1/12 off the
        # diagonal and 1/3 at the interior node
        mesh = build_interval_mesh(0, 1, 2)
        dm = build_dofmap(mesh, P1_1D)
        M = assemble(mesh, dm, mass_density).toarray()
        expected = np.array(
            [
                [1 / 6, 1 / 12, 0],
                [1 / 12, 1 / 3, 1 / 12],
                [0, 1 / 12, 1 / 6],
            ]
        )
        assert_allclose(M, expected, atol=1e-15)
        assert_allclose(M.sum(), 1.0, atol=1e-15)

    def test_exact_symmetry(self):
        mesh = build_rect_mesh(1.3, 0.7, 5, 4)
        dm = build_dofmap(mesh, Q1_VECTOR2)
        K = assemble(mesh, dm, stiffness_density, space=Q1_VECTOR2)
        diff = K.full() - K.full().T
        assert diff.nnz == 0
        assert K.lower.nnz == (K.full().nnz + K.n) // 2

    def test_q1_closed_form_element_matrices(self):
        # one a x b rectangle against hand-derived element matrices; the
        # closed forms are stated for the ccw corner order, the mesh numbers
        # nodes row-major, so permute through the element connectivity
        a, b = 0.8, 0.5
        mesh = build_rect_mesh(a, b, 1, 1)
        dm = build_dofmap(mesh, Q1_SCALAR)
        perm = mesh.elements[0]  # local ccw -> global
        M_ccw = (a * b / 36.0) * np.array(
            [[4, 2, 1, 2], [2, 4, 2, 1], [1, 2, 4, 2], [2, 1, 2, 4]]
        )
        Kxx = np.array([[2, -2, -1, 1], [-2, 2, 1, -1], [-1, 1, 2, -2], [1, -1, -2, 2]])
        Kyy = np.array([[2, 1, -1, -2], [1, 2, -2, -1], [-1, -2, 2, 1], [-2, -1, 1, 2]])
        K_ccw = (b / a) * Kxx / 6.0 + (a / b) * Kyy / 6.0

        M_exact = np.empty((4, 4))
        K_exact = np.empty((4, 4))
        M_exact[np.ix_(perm, perm)] = M_ccw
        K_exact[np.ix_(perm, perm)] = K_ccw
        M = assemble(mesh, dm, mass_density).toarray()
        K = assemble(mesh, dm, stiffness_density).toarray()
        assert_allclose(M, M_exact, atol=1e-13)
        assert_allclose(K, K_exact, atol=1e-13)

    def test_p2_mass_total(self):
        mesh = build_interval_mesh(0, 2, 3)
        dm = build_dofmap(mesh, P2_1D)
        M = assemble(mesh, dm, mass_density)
        assert_allclose(M.full().sum(), 2.0, atol=1e-13)


def quadratic(x):
    return x[..., 0] ** 2 + 3 * x[..., 0] * x[..., 1] - 2 * x[..., 1] ** 2 + x[..., 0] - x[..., 1] + 1


def quadratic_grad(x):
    gx = 2 * x[..., 0] + 3 * x[..., 1] + 1
    gy = 3 * x[..., 0] - 4 * x[..., 1] - 1
    return np.stack([gx, gy], axis=-1)


class TestMorley:
    def test_interpolant_reproduces_quadratics(self):
        tri = split_quads(build_rect_mesh(1, 1, 3, 3))
        coeffs = morley_interpolate(tri, quadratic, quadratic_grad)
        batch = element_batch(tri, MORLEY, triangle_rule(4))
        loc = coeffs[build_dofmap(tri, MORLEY).element_to_global]
        vals = np.einsum("eqi,ei->eq", batch.phi, loc)
        assert_allclose(vals, quadratic(batch.x), atol=1e-11)
        grads = np.einsum("eqid,ei->eqd", batch.grad, loc)
        assert_allclose(grads, quadratic_grad(batch.x), atol=1e-10)

    def test_patch_test_on_irregular_triangles(self):
        # same quadratic reproduction on a trapezoid-profile mesh, where no
        # two triangles are congruent and edge normals are not axis-aligned
        from rmplates import PiecewiseLinear, ThinDomainSpec, build_thin_mesh, split_quads

        spec = ThinDomainSpec(
            (0.0, 1.0),
            PiecewiseLinear(np.array([0.0, 0.4, 1.0]), np.array([0.3, 0.55, 0.4])),
            PiecewiseLinear(np.array([0.0, 1.0]), np.array([0.5, 1.0])),
            0.7,
        )
        tri = split_quads(build_thin_mesh(spec, 6, 3))
        coeffs = morley_interpolate(tri, quadratic, quadratic_grad)
        batch = element_batch(tri, MORLEY, triangle_rule(4))
        loc = coeffs[build_dofmap(tri, MORLEY).element_to_global]
        vals = np.einsum("eqi,ei->eq", batch.phi, loc)
        assert_allclose(vals, quadratic(batch.x), atol=1e-10)
        hess = np.einsum("eqiab,ei->eqab", batch.hess, loc)
        H = np.array([[2.0, 3.0], [3.0, -4.0]])
        assert_allclose(hess, np.broadcast_to(H, hess.shape), atol=1e-9)

    def test_patch_test_energy(self):
        # (1-s) D2u:D2v + s (Lap u)(Lap v) on the interpolant of a quadratic
        # equals the exact constant-density integral
        sigma = 0.3
        tri = split_quads(build_rect_mesh(1, 1, 4, 4))
        dm = build_dofmap(tri, MORLEY)
        coeffs = morley_interpolate(tri, quadratic, quadratic_grad)

        def density(batch):
            lap = batch.hess[..., 0, 0] + batch.hess[..., 1, 1]
            out = (1 - sigma) * np.einsum("eq,eqiab,eqjab->eij", batch.w, batch.hess, batch.hess)
            return out + sigma * np.einsum("eq,eqi,eqj->eij", batch.w, lap, lap)

        A = assemble(tri, dm, density, triangle_rule(4))
        got = coeffs @ (A.full() @ coeffs)
        H = np.array([[2.0, 3.0], [3.0, -4.0]])
        exact = (1 - sigma) * np.sum(H * H) + sigma * np.trace(H) ** 2
        assert_allclose(got, exact, atol=1e-10)


class TestMatrixMarket:
    def test_export_round_trip(self, tmp_path):
        import scipy.io

        mesh = build_rect_mesh(1, 1, 3, 2)
        dm = build_dofmap(mesh, Q1_SCALAR)
        M = assemble(mesh, dm, mass_density)
        path = tmp_path / "mass.mtx"
        M.mmwrite(path)
        header = path.read_text().splitlines()[0]
        assert "symmetric" in header
        back = scipy.io.mmread(path).toarray()
        assert_allclose(back, M.toarray(), atol=1e-15)
