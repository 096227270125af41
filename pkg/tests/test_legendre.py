"""Legendre construction of hyperkahler cones from a potential L."""

import numpy as np
import pytest

from ghqk import gh, legendre as lg
from ghqk.excalc import CENTRAL, DerivScheme, sup

N = np.array([[-1.0, 0.2], [0.2, -0.7]])
M = np.array([[0.3 + 0.1j, 0.2j], [0.2j, -0.4]])


class TestPotential:
    """Linear constraints and homogeneity of L."""

    def test_quadratic_L(self, rng):
        L = lg.quadratic_L(N, M)
        x = rng.normal(size=(2, 3))
        assert lg.constraints_residual(L, x) < 1e-10
        # quadratic L has the wrong scaling weight for a cone
        assert lg.hkc_residual(L, x) > 1e-2

    def test_norm_L(self, rng):
        x = rng.normal(size=(2, 3))
        assert lg.hkc_residual(lg.norm_L(2), x) < 1e-10

    def test_non_solution_fails(self, rng):
        x = rng.normal(size=(2, 3))
        L = lg.LPotential(2, lambda y: y[0, 0] ** 2 + y[1, 0] ** 2)
        assert lg.constraints_residual(L, x) > 1e-3

    def test_complex_coordinates(self, rng):
        x = rng.normal(size=(2, 3))
        z, xr = lg.to_complex(x)
        assert np.allclose(z, 0.5 * (x[:, 1] + 1j * x[:, 2]))
        assert np.allclose(lg.from_complex(z, xr), x)


class TestTransform:
    """The transform inverts u = dL/dz and yields GH data."""

    def test_bogomolny(self, rng):
        data = lg.legendre_gh(lg.quadratic_L(N, M))
        x = rng.normal(size=(2, 3))
        assert gh.bogomolny1_residual(data, x) < 1e-6
        assert gh.bogomolny2_residual(data, x) < 1e-6

    def test_round_trip_against_linear_solve(self, rng):
        L = lg.quadratic_L(N, M)
        x = rng.normal(size=(2, 3))
        z, xr = lg.to_complex(x)
        u = lg.u_coords(L, [0.1, 0.2], None, x)
        res = lg.transform(L, z, u)
        assert sup(res.x - xr) < 1e-10
        a, b = x[:, 1], x[:, 2]
        direct = np.linalg.solve(N, 2 * u.imag - 0.5 * (M.imag @ a - M.real @ b))
        assert sup(direct - xr) < 1e-10

    def test_gauge_kernel_scaling_part(self, rng):
        """Without shifts only the L1 + i L0 combination annihilates u."""
        L = lg.norm_L(2)
        x = rng.normal(size=(2, 3))
        u = lambda y, s: lg.u_coords(L, s, None, y)
        _, parts = lg.gauge_kernel_residual(u, x, np.array([0.1, 0.2]), DerivScheme(CENTRAL, 1e-4, 4), detail=True)
        assert parts["L1+iL0"] < 1e-8

    def test_higgs_from_L_symmetric(self, rng):
        U = lg.higgs_from_L(lg.quadratic_L(N, M), rng.normal(size=(2, 3)))
        assert sup(U - U.T) < 1e-12
