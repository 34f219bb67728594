import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from rmplates import (
    BcFamily,
    MaterialParams,
    build_rect_mesh,
    emit_report,
    fit_rate,
    kernel_census,
    korn_constant,
    poincare_check,
    sweep_delta,
    sweep_thickness,
)
from rmplates.experiments import EXPECTED_KERNELS, SweepConfig, korn_sweep

PARAMS = MaterialParams(E=1.0, sigma=0.3, k=5.0 / 6.0, t=0.1)


class TestFitRate:
    def test_exact_square_law(self):
        pts = [(p, p**2) for p in (0.4, 0.2, 0.1, 0.05)]
        fit = fit_rate(pts)
        assert_allclose(fit.slope, 2.0, atol=1e-12)
        assert_allclose(fit.r2, 1.0, atol=1e-12)

    def test_constant_error(self):
        fit = fit_rate([(p, 3.0) for p in (0.4, 0.2, 0.1)])
        assert_allclose(fit.slope, 0.0, atol=1e-12)

    def test_noisy_square_root(self):
        rng = np.random.default_rng(12)
        ps = np.geomspace(1.0, 1e-3, 12)
        pts = [(p, 3.0 * np.sqrt(p) * (1.0 + 1e-3 * rng.standard_normal())) for p in ps]
        fit = fit_rate(pts)
        assert abs(fit.slope - 0.5) < 0.02

    def test_axis_rescaling_shifts_intercept_only(self):
        pts = [(p, 2.0 * p**1.3) for p in (0.4, 0.2, 0.1, 0.05)]
        a = fit_rate(pts)
        b = fit_rate([(7.0 * p, e) for p, e in pts])
        assert abs(a.slope - b.slope) < 1e-12
        assert abs(a.intercept - b.intercept) > 0.1

    def test_guards(self):
        with pytest.raises(ValueError):
            fit_rate([(0.1, 1.0), (0.05, 0.5)])
        with pytest.raises(ValueError):
            fit_rate([(0.1, 1.0), (0.05, 0.0), (0.025, 0.1)])


class TestSweepConfig:
    def test_values_must_decrease(self):
        with pytest.raises(ValueError):
            SweepConfig(kind="delta", values=(0.1, 0.2))

    def test_profile_spec(self):
        cfg = SweepConfig(
            kind="delta",
            values=(0.2, 0.1),
            profile={"x": [0.0, 1.0], "f1": [0.5, 0.5], "f2": [0.5, 1.0]},
        )
        spec = cfg.spec_at(0.1)
        assert_allclose(spec.g(np.array([0.0, 1.0])), [1.0, 1.5])


class TestKernelCensus:
    @pytest.mark.parametrize("n", [4, 8])
    def test_mesh_independent(self, n):
        table = kernel_census(PARAMS, build_rect_mesh(1, 1, n, n))
        assert table == {bc.value: dim for bc, dim in EXPECTED_KERNELS.items()}


class TestKorn:
    def test_rotation_rayleigh_quotient_is_three(self):
        # eta = (y, -x): int |D eta|^2 = 2, eps(eta) = 0, int |eta|^2 = 2/3
        from rmplates.assemble import assemble, stiffness_density
        from rmplates.spaces import Q1_VECTOR2, build_dofmap

        mesh = build_rect_mesh(1, 1, 8, 8)
        dm = build_dofmap(mesh, Q1_VECTOR2)
        A = assemble(mesh, dm, stiffness_density, space=Q1_VECTOR2)

        def eps_mass(b):
            eps = 0.5 * (b.grad + np.swapaxes(b.grad, -1, -2))
            return np.einsum("eq,eqicd,eqjcd->eij", b.w, eps, eps) + np.einsum(
                "eq,eqic,eqjc->eij", b.w, b.phi, b.phi
            )

        B = assemble(mesh, dm, eps_mass, space=Q1_VECTOR2)
        x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
        eta = np.concatenate([y, -x])
        q = (eta @ (A.full() @ eta)) / (eta @ (B.full() @ eta))
        assert_allclose(q, 3.0, rtol=1e-12)

    def test_unit_square_constant_stable(self):
        c16 = korn_constant(build_rect_mesh(1, 1, 16, 16))
        c32 = korn_constant(build_rect_mesh(1, 1, 32, 32))
        assert c16 >= 3.0 and c32 >= 3.0
        assert abs(c32 - c16) / c16 <= 0.05

    def test_first_kind_constant(self):
        # |eps|^2 <= |D|^2 pointwise, so the quotient is at least 1; the
        # discrete constant on the rigid-free complement converges slowly
        # from below, so only coarse stability is asserted
        c8 = korn_constant(build_rect_mesh(1, 1, 8, 8), first_kind=True)
        c16 = korn_constant(build_rect_mesh(1, 1, 16, 16), first_kind=True)
        assert c8 > 1.0 and c16 > c8
        assert (c16 - c8) / c8 <= 0.2

    def test_thin_sweep_increases(self):
        cfg = SweepConfig(kind="korn", values=(0.4, 0.2, 0.1), mesh_n=32, mesh_ny=6)
        rep = korn_sweep(cfg)
        assert rep["checks"]["strictly_increasing"]
        assert rep["unit_square_constant"] >= 3.0


class TestPoincare:
    def test_blowup_and_square_value(self):
        rep = poincare_check((0.4, 0.2, 0.1), mesh_n=24, mesh_ny=8)
        assert rep["fit"]["slope"] <= -1.9
        assert abs(rep["square_extrapolated"] - 2 * np.pi**2) / (2 * np.pi**2) <= 0.01
        assert all(e > 0 for e in rep["eigenvalues"])


class TestSweeps:
    def test_thickness_sweep_small(self):
        cfg = SweepConfig(
            kind="thickness", values=(0.2, 0.1, 0.05), mesh_n=16, num_eigs=2, bc=BcFamily.HARD_CLAMPED
        )
        rep = sweep_thickness(cfg)
        assert rep["checks"]["gaps_strictly_decreasing"]
        assert len(rep["gaps"]) == 3 and len(rep["gaps"][0]) == 2

    def test_thickness_sweep_rejects_nonstandard_limit(self):
        from rmplates.errors import UnsupportedLimitError

        cfg = SweepConfig(kind="thickness", values=(0.2, 0.1, 0.05), mesh_n=8, bc=BcFamily.HARD_RIGID)
        with pytest.raises(UnsupportedLimitError):
            sweep_thickness(cfg)

    def test_delta_sweep_small(self):
        cfg = SweepConfig(kind="delta", values=(0.4, 0.2, 0.1), mesh_n=32, mesh_ny=4)
        rep = sweep_delta(cfg, num_clusters=2)
        assert rep["checks"]["resolvent_monotone"]
        assert len(rep["resolvent_gaps"]) == 3
        assert all(len(p["eig_gap_sums"]) == 2 for p in rep["points"])

    def test_delta_sweep_trapezoid_convergence_only(self):
        # general profiles are outside the cylinder rate theorem: assert
        # convergence of the gaps, not a rate
        cfg = SweepConfig(
            kind="delta",
            values=(0.3, 0.15, 0.075),
            mesh_n=48,
            mesh_ny=4,
            bc=BcFamily.FREE,
            profile={"x": [0.0, 1.0], "f1": [0.5, 0.5], "f2": [0.5, 1.0]},
        )
        rep = sweep_delta(cfg, num_clusters=2)
        assert rep["checks"]["resolvent_monotone"]
        rel = np.array(rep["relative_eig_gaps"])
        assert np.all(rel[-1] <= 0.01)
        assert np.max(rep["max_angles"][-1]) <= 0.05

    def test_free_bc_kernel_eigenvalues_t_independent(self):
        # the three unit eigenvalues are exact at every thickness
        from rmplates.eigensolve import EigOptions, solve_gep_smallest
        from rmplates import assemble_rm_pencil

        mesh = build_rect_mesh(1, 1, 8, 8)
        for t in (0.2, 0.1, 0.05, 0.025):
            pen = assemble_rm_pencil(mesh, MaterialParams(E=1.0, sigma=0.3, t=t), BcFamily.FREE)
            lam = solve_gep_smallest(pen.A, pen.B, EigOptions(k=3)).eigenvalues
            assert np.abs(lam - 1.0).max() <= 1e-8


class TestEmitReport:
    def _small_report(self):
        cfg = SweepConfig(
            kind="thickness", values=(0.2, 0.1, 0.05), mesh_n=8, num_eigs=2, bc=BcFamily.HARD_CLAMPED
        )
        return sweep_thickness(cfg)

    def test_empty_report_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            emit_report({}, tmp_path)
        with pytest.raises(ValueError):
            emit_report({"parameter_values": []}, tmp_path)

    def test_round_trip_bit_for_bit(self, tmp_path):
        rep = self._small_report()
        paths = emit_report(rep, tmp_path)
        back = json.loads(open(paths["json"]).read())
        if rep["fit"] is not None:
            assert back["fit"]["slope"] == rep["fit"]["slope"]
        assert back["gaps"] == rep["gaps"]

    def test_csv_schema(self, tmp_path):
        import csv

        rep = self._small_report()
        paths = emit_report(rep, tmp_path)
        rows = list(csv.reader(open(paths["csv"])))
        k = len(rep["gaps"][0])
        assert rows[0] == ["sweep", "parameter"] + [f"gap_eig_{j+1}" for j in range(k)] + [
            "resolvent_gap",
            "fitted_slope",
        ]
        assert len(rows[0]) == 2 + k + 1 + 1
        assert len(rows) == 1 + len(rep["parameter_values"])
