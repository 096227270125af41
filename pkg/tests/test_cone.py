"""Cone criteria: potentials, homothety generators and the obstruction identities."""

import numpy as np
import pytest

from ghqk import cone, gh
from ghqk.excalc import sup

CONES = [gh.monopole_data, gh.two_center_data, gh.three_center_data]


class TestPotentials:
    """Potentials satisfy the linear constraints and reproduce the Higgs field."""

    @pytest.mark.parametrize("make", [cone.three_center_potential, cone.two_center_potential])
    def test_constraints(self, make, rng, sample_base):
        pot = make()
        for _ in range(5):
            x = sample_base(rng, pot.m)
            assert cone.potential_constraints(pot, x) < 1e-6

    def test_round_trip(self, rng, sample_base):
        for data in (gh.three_center_data(), gh.two_center_data()):
            x = sample_base(rng, data.m)
            assert cone.higgs_round_trip(data, x) < 1e-6

    def test_non_potential_fails(self, rng, sample_base):
        pot = cone.ConePotential(2, lambda x: x[0] @ x[0] + x[1] @ x[1])
        assert cone.potential_constraints(pot, sample_base(rng, 2)) > 1e-3


class TestCones:
    """Homogeneous data pass the cone tests, skewed data do not."""

    @pytest.mark.parametrize("make", CONES, ids=lambda f: f.__name__)
    def test_cone_data(self, make, rng, sample_base):
        data = make()
        x = sample_base(rng, data.m, avoid_string=True)
        p = data.point(x, rng.uniform(-1, 1, data.m))
        assert cone.hkc_higgs_residual(data, x) < 1e-8
        assert cone.cone_criterion_residual(data, p) < 1e-6
        assert cone.xc_residual(data, p) < 1e-6
        assert cone.starc0_residual(data, p) < 1e-6

    def test_skewed_is_not_a_cone(self, rng, sample_base):
        data = gh.skewed_data()
        x = sample_base(rng, data.m, avoid_string=True)
        p = data.point(x, rng.uniform(-1, 1, data.m))
        assert cone.hkc_higgs_residual(data, x) > 1e-2
        assert cone.cone_criterion_residual(data, p) > 1e-2

    @pytest.mark.parametrize("make", CONES + [gh.skewed_data], ids=lambda f: f.__name__)
    def test_identities_hold_for_any_data(self, make, rng, sample_base):
        data = make()
        x = sample_base(rng, data.m, avoid_string=True)
        p = data.point(x, rng.uniform(-1, 1, data.m))
        assert cone.general_identity_residual(data, p) < 1e-6
        assert cone.obstruction_identity_residual(data, p) < 1e-6


class TestHelpers:
    """Generators, collinearity and degeneracy."""

    def test_base_generators(self, rng):
        x = rng.normal(size=(2, 3))
        gens = cone.base_generators(x)
        assert gens.shape == (4, 2, 3)
        assert np.allclose(gens[0], x)
        # rotations are tangent to spheres
        assert np.allclose(np.einsum("aKc,Kc->a", gens[1:], x), 0.0)
        assert np.allclose(gens[3], np.cross(x, [0.0, 0.0, 1.0]))

    def test_collinear(self):
        x = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]])
        assert cone.collinear(x)
        assert not cone.collinear(np.array([[1.0, 0, 0], [0, 1.0, 0]]))

    def test_degenerate_higgs(self):
        assert cone.higgs_is_degenerate(np.array([[1.0, 1.0], [1.0, 1.0]]))
        assert not cone.higgs_is_degenerate(np.eye(2))
