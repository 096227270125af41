"""Four-dimensional quaternionic Kahler metrics from an eigenfunction potential."""

import numpy as np
import pytest

from ghqk import cp4d, imhp, qk
from ghqk.excalc import sup

NAMES = ["rho2sq", "rho1", "one", "linear-combo"]


class TestPotentials:
    """Built-in potentials solve the constraint and the eigenvalue equation."""

    @pytest.mark.parametrize("name", NAMES)
    def test_constraint(self, name, rng):
        u = cp4d.builtin_potential(name)
        for _ in range(5):
            r = cp4d.random_point(rng)[:2]
            assert cp4d.constraint_residual(u, r) < 1e-12
            assert cp4d.eigenfunction_residual(u, r) < 1e-8

    def test_superposition(self, rng):
        u = cp4d.rho1_potential().scale(2.0) + cp4d.rho2sq_potential().scale(3.0)
        r = cp4d.random_point(rng)[:2]
        assert cp4d.eigenfunction_residual(u, r) < 1e-8

    def test_non_eigenfunction_fails(self, rng):
        u = cp4d.CPPotential(lambda a, b: a * a * a + b)
        r = cp4d.random_point(rng)[:2]
        assert cp4d.eigenfunction_residual(u, r) > 1e-3

    def test_closed_form_higgs(self):
        u = cp4d.rho2sq_potential()
        r = np.array([0.7, 1.3])
        assert np.isclose(cp4d.higgs_4d(u, r)[0, 0], 0.7**2 - 1.3**2 / 2)

    def test_domain(self):
        with pytest.raises(imhp.ChartDomainError):
            cp4d.rho1_potential()([0.3, -1.0])

    def test_unknown_name(self):
        with pytest.raises(KeyError):
            cp4d.builtin_potential("nope")


class TestAgainstPipeline:
    """The closed-form metric agrees with the generic reduction pipeline."""

    @pytest.mark.parametrize("name", ["rho2sq", "rho1", "linear-combo"])
    def test_metric(self, name, rng):
        u = cp4d.builtin_potential(name)
        rd = cp4d.reduced_data(u)
        st = qk.qk_structure(rd)
        cm = cp4d.cp_metric(u)
        p = cp4d.random_point(rng, u=u)
        r = p[:2]
        assert sup(imhp.cov_deriv(imhp.Section(2, 1, lambda rho: u(rho[1, :2])), cp4d._rho_config(r)) - cp4d.covariant_gradient(u, r)) < 1e-8
        assert sup(cp4d.higgs_from_hessian(u, r) - cp4d.higgs_4d(u, r)) < 1e-6
        assert sup(cm.s_g(p) - st.s_g(p)) < 1e-8
        assert sup(cm.s_omega(p) - st.s_omega(p)) < 1e-8
        assert sup(cp4d.theta_4d(u, p) - st.theta_vec(p)) < 1e-8
        assert qk.einstein_residual(st, p=p) < 1e-6
