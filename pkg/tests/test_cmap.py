"""c-map: prepotentials, the twistor potential L, upstairs GH data and the downstairs FS metric."""

import numpy as np
import pytest

from ghqk import cmap, cone, gh, legendre, qk
from ghqk.excalc import sup


@pytest.fixture(scope="module")
def F1():
    return cmap.quadratic_prepotential([[0.5j]])


def sample(F, seed=7):
    rng = np.random.default_rng(seed)
    pu, pb, q = cmap.random_cone_point(F, rng)
    m = F.n + 1
    return pu[: 3 * m].reshape(m, 3), pu[3 * m :], pu, pb


class TestPrepotential:
    """Families, homogeneity and configuration parsing."""

    def test_homogeneity(self, rng):
        for F in (
            cmap.quadratic_prepotential([[0.5j]]),
            cmap.quadratic_prepotential(np.diag([1j, -1j])),
            cmap.monomial_prepotential(1j, [1.5, 0.5]),
            cmap.plugin_prepotential(lambda e: 0.5j * e[0] * e[0] - 0.25 * e[1] * e[1], 2),
        ):
            eta = rng.normal(size=F.n) + 1j * rng.normal(size=F.n)
            assert cmap.homogeneity_residual(F, eta) < 1e-10

    def test_plugin_matches_quadratic(self, rng):
        C = np.array([[0.3j, 0.1], [0.1, -0.4j]])
        exact = cmap.quadratic_prepotential(C)
        plug = cmap.plugin_prepotential(lambda e: 0.5 * (e[0] * (C[0, 0] * e[0] + C[0, 1] * e[1]) + e[1] * (C[1, 0] * e[0] + C[1, 1] * e[1])), 2)
        eta = rng.normal(size=2) + 1j * rng.normal(size=2)
        assert sup(np.asarray(plug.FA(eta), dtype=complex) - exact.FA(eta)) < 1e-12
        assert sup(np.asarray(plug.FAB(eta), dtype=complex) - C) < 1e-12
        assert plug.lower_precision

    def test_invalid(self):
        with pytest.raises(ValueError):
            cmap.quadratic_prepotential([[1.0, 2.0], [0.0, 1.0]])
        with pytest.raises(ValueError):
            cmap.monomial_prepotential(1.0, [1.0, 0.5])
        with pytest.raises(ValueError):
            cmap.prepotential_from_config({"family": "cubic"})

    def test_from_config(self):
        F = cmap.prepotential_from_config({"family": "quadratic", "C": [[0.0, 0.5]]})
        assert F.n == 1 and np.isclose(F.params["C"][0, 0], 0.5j)
        G = cmap.prepotential_from_config({"family": "monomial", "c": [0.0, 1.0], "powers": [1.5, 0.5]})
        assert G.n == 2

    def test_dual_of_quadratic(self):
        F = cmap.quadratic_prepotential(np.diag([1j, -2j]))
        assert np.allclose(F.dual().params["C"], -np.linalg.inv(F.params["C"]))
        with pytest.raises(NotImplementedError):
            cmap.monomial_prepotential(1j, [1.5, 0.5]).dual()


class TestPotentialL:
    """Closed form against the contour integral and the twistor identities."""

    def test_contour_matches_closed(self, F1):
        x, *_ = sample(F1)
        assert abs(cmap.L_contour(F1, x) - cmap.L_closed(F1, x)) < 1e-8

    def test_identities(self, F1):
        x, *_ = sample(F1)
        assert cmap.identity_suite(F1, x, detail=False) < 1e-8

    def test_L_is_cone_potential(self, F1):
        x, *_ = sample(F1)
        L = cmap.cmap_L(F1)
        assert legendre.constraints_residual(L, x) < 1e-8
        assert legendre.hkc_residual(L, x) < 1e-8

    def test_degenerate(self, F1):
        with pytest.raises(cmap.DegenerateConfigurationError):
            cmap.roots_zeta0(0.0, 0.0, 0.0)


class TestUpstairs:
    """GH data of the c-map cone."""

    def test_bogomolny_and_gauge(self, F1):
        x, psi, *_ = sample(F1)
        up = cmap.cmap_gh(F1)
        assert gh.bogomolny1_residual(up, x) < 1e-6
        assert gh.bogomolny2_residual(up, x) < 1e-6
        assert cone.gauge_fix_residual(up, x) < 1e-8

    def test_matches_legendre(self, F1):
        x, psi, *_ = sample(F1)
        up, leg = cmap.cmap_gh(F1), cmap.legendre_cmap_gh(F1)
        assert sup(up.U(x) - leg.U(x)) < 1e-8
        assert sup(gh.field_strength(up, x) - gh.field_strength(leg, x)) < 1e-6

    def test_shifts_and_gauge_kernel(self, F1):
        x, psi, *_ = sample(F1)
        res = cmap.shifts_and_coords(F1, x, psi)
        for key in ("u_A_dual_identity", "u_0_self_dual", "shift_0", "psi_tilde_dual"):
            assert res[key] < 1e-8
        u = lambda y, s: cmap.holomorphic_coords(F1, y, s)[1]
        assert legendre.gauge_kernel_residual(u, x, psi) < 1e-6

    def test_kappa(self, F1):
        x, psi, *_ = sample(F1)
        z, u = cmap.holomorphic_coords(F1, x, psi)
        res = legendre.transform(cmap.cmap_L(F1), z, u, guess=x[:, 0] * 1.01)
        assert abs(res.kappa - cmap.hk_potential_cmap(F1, x)) < 1e-8

    def test_dualization(self, F1):
        x, psi, *_ = sample(F1)
        worst, parts = cmap.dualization(F1, x, psi)
        assert worst < 1e-8
        assert parts["tau_modular"] < 1e-8

    def test_heisenberg_upstairs(self, F1):
        _, _, pu, _ = sample(F1)
        assert cmap.heisenberg_upstairs(F1, pu, detail=False) < 1e-8


class TestDownstairs:
    """Reduced data and the closed-form FS metric."""

    def test_reduction_matches_pipeline(self, F1):
        _, _, _, pb = sample(F1)
        rd = cmap.reduce_cmap(F1)
        rho = cmap.imhp.from_free(pb[:2], 2)
        up = cmap.cmap_gh(F1)
        assert sup(rd.U(rho) - qk.reduce_higgs(up)(rho)) < 1e-8
        assert sup(rd.A(rho) - qk.reduce_connection(up)(rho)) < 1e-8

    def test_fs_checks(self, F1):
        _, _, _, pb = sample(F1)
        assert cmap.fs_checks(F1, pb, detail=False) < 1e-8

    def test_einstein_and_moment_maps(self, F1):
        _, _, _, pb = sample(F1)
        st = qk.qk_structure(cmap.reduce_cmap(F1))
        assert qk.einstein_residual(st, p=pb) < 1e-6
        for I in range(2):
            assert qk.moment_map_residual(st, I, pb) < 1e-6

    def test_heisenberg_downstairs(self, F1):
        _, _, _, pb = sample(F1)
        _, res = cmap.heisenberg_downstairs(F1, pb)
        assert res["algebra"] < 1e-8
        assert res["killing"] < 1e-6

    def test_signature(self, F1):
        rng = np.random.default_rng(3)
        pts = [cmap.random_base_point(F1, rng, require_negative_R=True) for _ in range(5)]
        ok, rep = cmap.signature_check(F1, pts)
        assert ok and rep["violations"] == 0

    def test_end_to_end_closed(self, F1):
        _, _, _, pb = sample(F1)
        assert cmap.end_to_end_residual(F1, [pb], "closed") < 1e-8

    def test_swann(self, F1):
        _, _, pu, _ = sample(F1)
        rd = cmap.reduce_cmap(F1)
        up = cmap.cmap_gh(F1)
        assert qk.swann_consistency(up, rd, pu) < 1e-6
        assert qk.moment_lift_check(up, rd, pu) < 1e-6


class TestRankTwo:
    """n = 2 prepotentials at the looser rank-two tolerance."""

    @pytest.mark.parametrize(
        "F",
        [cmap.monomial_prepotential(1.0, [-1, 3]), cmap.quadratic_prepotential(np.diag([1j, -1j]))],
        ids=["monomial", "quadratic"],
    )
    def test_fs_and_einstein(self, F):
        _, _, _, pb = sample(F, seed=11)
        assert cmap.fs_checks(F, pb, detail=False) < 1e-5
        st = qk.qk_structure(cmap.reduce_cmap(F))
        assert qk.einstein_residual(st, p=pb) < 1e-5
