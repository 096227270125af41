"""Canonical chart of Im HP^n, its covariant derivative and sections."""

import numpy as np
import pytest

from ghqk import imhp
from ghqk import quatmath as qm


@pytest.fixture(params=[1, 2, 3])
def chart(request):
    return imhp.RestrictedChart(request.param)


class TestChart:
    """Chart layout, embedding and projection."""

    def test_dimensions(self, chart):
        assert chart.dim == 3 * chart.n - 1
        assert len(imhp.free_slots(chart.m)) == chart.dim
        assert len(imhp.free_slots(chart.m)) + len(imhp.frozen_slots(chart.m)) == 3 * chart.m

    def test_free_round_trip(self, chart, rng):
        rho = chart.random_point(rng)
        assert np.allclose(imhp.from_free(imhp.to_free(rho), chart.m), rho)
        chart.validate(rho)

    def test_validate_rejects(self, chart, rng):
        rho = chart.random_point(rng)
        bad = rho.copy()
        bad[1, 1] = -1.0
        with pytest.raises(imhp.ChartDomainError):
            chart.validate(bad)
        bad = rho.copy()
        bad[0, 1] = 0.5
        with pytest.raises(imhp.ChartDomainError):
            chart.validate(bad)

    def test_project_embed(self, chart, rng):
        rho = chart.random_point(rng)
        q = rng.normal(size=4)
        x = imhp.embed(rho, q)
        r2, q2 = imhp.project(x)
        assert np.abs(r2 - rho).max() < 1e-12
        assert np.abs(q2 - qm.z2_representative(q)).max() < 1e-12
        assert np.abs(imhp.embed(r2, q2) - x).max() < 1e-12

    def test_project_collinear_raises(self):
        x = np.array([[1.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
        with pytest.raises(imhp.ChartDomainError):
            imhp.project(x)

    def test_zero_n_rejected(self):
        with pytest.raises(ValueError):
            imhp.RestrictedChart(0)


class TestConnection:
    """Connection coefficients and the covariant derivative."""

    def test_analytic_table(self, chart, rng):
        rho = chart.random_point(rng)
        assert np.abs(imhp.conn_coeffs(rho).A - imhp.analytic_coeffs(rho)).max() < 1e-12
        assert imhp.completeness_check(rho) < 1e-10

    def test_rho_is_parallel_identity(self, chart, rng):
        rho = chart.random_point(rng)
        nab = imhp.cov_deriv(imhp.rho_section(chart.m), rho)
        expected = np.einsum("IJ,ij->IiJj", np.eye(chart.m), np.eye(3))
        assert np.abs(nab - expected).max() < 1e-8

    def test_sections(self, chart, rng):
        rho = chart.random_point(rng)
        q = rng.normal(size=4)
        m = chart.m
        pot = imhp.Section(m, 1, lambda r: sum(np.sqrt(r[I] @ r[I]) for I in range(m)))
        vec = imhp.Section(m, 0, lambda r: np.cross(r[0], r[1]) / np.sqrt(r[0] @ r[0]) / np.sqrt(r[1] @ r[1]), (0,))
        for sec in (imhp.rho_section(m), pot, vec):
            assert imhp.section_constraints_residual(sec, rho) < 1e-8
            assert imhp.lift_residual(sec, rho, q) < 1e-7
        assert imhp.flatness_residual(pot, rho) < 1e-5
