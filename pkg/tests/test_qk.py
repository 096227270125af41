"""Reduction of GH cones to quaternionic Kahler data and the resulting structure."""

import numpy as np
import pytest

from ghqk import gh, imhp, qk


@pytest.fixture(scope="module")
def two_center():
    data = gh.two_center_data()
    rd = qk.ReducedData(1, qk.reduce_higgs(data), lambda r: np.zeros((2, 2)), 1.0, data.scheme, data.name)
    return rd, qk.qk_structure(rd), qk.lift_to_gh(rd)


class TestReducedData:
    """Validation and layout."""

    def test_zero_s_rejected(self):
        with pytest.raises(ValueError):
            qk.ReducedData(1, lambda r: np.eye(2), lambda r: np.zeros((2, 2)), 0.0)

    def test_point_split(self, rng):
        rd = qk.ReducedData(2, lambda r: np.eye(3), lambda r: np.zeros((3, 5)))
        rho = imhp.RestrictedChart(2).random_point(rng)
        p = rd.point(rho, [0.1, 0.2, 0.3])
        r2, psi = rd.split(p)
        assert np.allclose(r2, rho) and np.allclose(psi, [0.1, 0.2, 0.3])
        assert p.shape == (rd.dim,)

    def test_sigma_r_imaginary(self, rng):
        x = rng.normal(size=(2, 3))
        out = qk.sigma_r(x)
        assert len(out) == 3


class TestTwoCenter:
    """Two-center cone reduced to four dimensions."""

    def test_reduced_bogomolny(self, two_center, rng):
        rd, _, _ = two_center
        rho = imhp.RestrictedChart(1).random_point(rng)
        assert qk.red_bogo1_residual(rd, rho) < 1e-6
        assert qk.red_bogo2_residual(rd, rho) < 1e-6

    def test_structure(self, two_center, rng):
        rd, st, _ = two_center
        rho = imhp.RestrictedChart(1).random_point(rng)
        p = rd.point(rho, rng.uniform(-1, 1, 2))
        assert qk.theta0_check(rd, p) < 1e-8
        assert qk.ansatz_variants_check(rd, p) < 1e-8
        assert qk.algebraic_qk_check(st, p) < 1e-8
        assert qk.einstein_residual(st, p=p) < 1e-6
        for I in range(rd.m):
            assert qk.moment_map_residual(st, I, p) < 1e-6
            assert qk.killing_residual(st, I, p) < 1e-6

    def test_swann_and_moment_lift(self, two_center, rng):
        rd, _, lifted = two_center
        rho = imhp.RestrictedChart(1).random_point(rng)
        psi = rng.uniform(-1, 1, 2)
        P = lifted.point(imhp.embed(rho, rng.normal(size=4)), psi)
        assert qk.swann_consistency(lifted, rd, P) < 1e-6
        assert qk.moment_lift_check(lifted, rd, P) < 1e-6

    def test_reduction_rejects_non_cone(self):
        with pytest.raises(qk.ReductionError):
            qk.reduce_higgs(gh.skewed_data())(np.array([[1.0, 0.0, 0.0], [0.3, 0.8, 0.0]]))
