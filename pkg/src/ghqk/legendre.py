"""Legendre transform construction of extended Gibbons-Hawking spaces.

A potential L is a real function on configurations x of shape (m, 3).  The
distinguished direction is the first axis: x^I = x^I_1 and
z^I = (x^I_2 + i x^I_3) / 2, so that d/dz = d_2 - i d_3 and d/dzbar = d_2 + i d_3.
Derivatives are taken with dual numbers unless another scheme is supplied.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import dual
from .cone import ConePotential, base_generators
from .excalc import DUAL, DerivScheme, partials, sup
from .gh import GHData

log = logging.getLogger(__name__)

__all__ = [
    "LPotential",
    "LegendreResult",
    "LegendreError",
    "LegendreSolver",
    "to_complex",
    "from_complex",
    "constraints_residual",
    "hkc_residual",
    "complex_generators",
    "transform",
    "higgs_from_L",
    "connection_from_L",
    "u_coords",
    "legendre_gh",
    "gauge_kernel_residual",
    "kappa_potential",
    "quadratic_L",
    "norm_L",
]


class LegendreError(RuntimeError):
    """The Legendre constraints could not be solved."""


def to_complex(x) -> tuple[np.ndarray, np.ndarray]:
    """(z, x1) from a configuration of shape (m, 3)."""
    x = np.asarray(x)
    return 0.5 * (x[:, 1] + 1j * x[:, 2]), x[:, 0]


def from_complex(z, xr) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return np.stack([np.asarray(xr, dtype=float), 2.0 * z.real, 2.0 * z.imag], axis=1)


@dataclass
class LPotential(ConePotential):
    """Potential L(z, zbar, x) as a real function of the configuration."""

    def Lx(self, x) -> np.ndarray:
        return self.gradient(x)[:, 0]

    def Lxx(self, x) -> np.ndarray:
        return self.hessian(x)[:, 0, :, 0]

    def Lxz(self, x) -> np.ndarray:
        """L_{x^I z^J}."""
        h = self.hessian(x)
        return h[:, 0, :, 1] - 1j * h[:, 0, :, 2]

    def Lzzbar(self, x) -> np.ndarray:
        """L_{z^I zbar^J}."""
        h = self.hessian(x)
        return h[:, 1, :, 1] + h[:, 2, :, 2] + 1j * (h[:, 1, :, 2] - h[:, 2, :, 1])


@dataclass
class LegendreResult:
    kappa: float
    x: np.ndarray
    u: np.ndarray
    z: np.ndarray
    iterations: int = 0
    residual: float = 0.0


def constraints_residual(L: LPotential, x, detail: bool = False):
    """L_{x^I x^J} + L_{z^I zbar^J} = 0 and L_{x^I z^J} = L_{x^J z^I}."""
    h = L.hessian(x)
    lxx = h[:, 0, :, 0]
    lzz = h[:, 1, :, 1] + h[:, 2, :, 2] + 1j * (h[:, 1, :, 2] - h[:, 2, :, 1])
    lxz = h[:, 0, :, 1] - 1j * h[:, 0, :, 2]
    res = {"laplace": sup(lxx + lzz), "symmetry": sup(lxz - lxz.T)}
    worst = max(res.values())
    return (worst, res) if detail else worst


def hkc_residual(L: LPotential, x, detail: bool = False):
    """L_1(L) = 0 and L_0(L) = L for the collective generators."""
    x = np.asarray(x, dtype=float).reshape(L.m, 3)
    g = L.gradient(x)
    gens = base_generators(x)
    LL = np.einsum("aKc,Kc->a", gens, g)
    res = {"L1": float(abs(LL[1])), "L0": float(abs(LL[0] - L(x)))}
    worst = max(res.values())
    return (worst, res) if detail else worst


def complex_generators(x) -> np.ndarray:
    """Components of L_1 + i L_0 and L_2 + i L_3 on the base; shape (2, m, 3), complex."""
    gens = base_generators(np.asarray(x, dtype=float))
    return np.stack([gens[1] + 1j * gens[0], gens[2] + 1j * gens[3]])


@dataclass
class LegendreSolver:
    """Newton solver for L_x(z, zbar, x) = 2 Im u with a warm start."""

    L: LPotential
    max_iter: int = 100
    rtol: float = 1e-12
    _warm: np.ndarray | None = field(default=None, repr=False)

    def solve(self, z, u, guess=None) -> LegendreResult:
        z = np.asarray(z, dtype=complex)
        u = np.asarray(u, dtype=complex)
        target = 2.0 * u.imag
        if guess is not None:
            xr = np.asarray(guess, dtype=float).copy()
        elif self._warm is not None and self._warm.shape == target.shape:
            xr = self._warm.copy()
        else:
            xr = target.copy()
        res = np.inf
        for it in range(1, self.max_iter + 1):
            cfg = from_complex(z, xr)
            F = self.L.Lx(cfg) - target
            res = sup(F)
            J = self.L.Lxx(cfg)
            cond = np.linalg.cond(J)
            if not np.isfinite(cond) or cond > 1e14:
                raise LegendreError(f"singular L_xx (condition {cond:.3e})")
            step = np.linalg.solve(J, F)
            xr = xr - step
            if sup(step) < self.rtol * max(1.0, sup(xr)):
                cfg = from_complex(z, xr)
                res = sup(self.L.Lx(cfg) - target)
                self._warm = xr.copy()
                kappa = self.L(cfg) - float(target @ xr)
                return LegendreResult(kappa, xr, u, z, it, res)
        raise LegendreError(f"Newton did not converge in {self.max_iter} iterations (residual {res:.3e})")


def transform(L: LPotential, z, u, guess=None, solver: LegendreSolver | None = None) -> LegendreResult:
    """kappa = L - 2 Im u_I x^I at the solution of L_{x^I} = 2 Im u_I."""
    return (solver or LegendreSolver(L)).solve(z, u, guess)


def higgs_from_L(L: LPotential, x) -> np.ndarray:
    """U_IJ = -1/2 L_{x^I x^J}."""
    return -0.5 * L.Lxx(x)


def _shift_gradient(phi: Callable, x, scheme: DerivScheme) -> np.ndarray:
    """d phi_I on the base, shape (m, m, 3)."""
    x = np.asarray(x, dtype=float)
    m = x.shape[0]
    g = partials(lambda y: phi(y.reshape(m, 3)), x.ravel(), scheme)
    return np.real(np.asarray(g)).T.reshape(m, m, 3)


def connection_from_L(L: LPotential, phi: Callable | None, x) -> np.ndarray:
    """A_I = Im(L_{x^I z^J} dz^J) + d phi_I, shape (m, m, 3)."""
    x = np.asarray(x, dtype=float).reshape(L.m, 3)
    h = L.hessian(x)
    A = np.zeros((L.m, L.m, 3))
    # dz = (dx_2 + i dx_3) / 2 and L_xz = h_12 - i h_13
    A[:, :, 1] = -0.5 * h[:, 0, :, 2]
    A[:, :, 2] = 0.5 * h[:, 0, :, 1]
    if phi is not None:
        A += _shift_gradient(phi, x, L.scheme)
    return A


def u_coords(L: LPotential, psi, phi: Callable | None, x) -> np.ndarray:
    """u_I = psi_I + phi_I + (i/2) L_{x^I}."""
    x = np.asarray(x, dtype=float).reshape(L.m, 3)
    shift = np.zeros(L.m) if phi is None else np.real(np.asarray(phi(x), dtype=complex))
    return np.asarray(psi, dtype=float) + shift + 0.5j * L.Lx(x)


def legendre_gh(L: LPotential, phi: Callable | None = None, name: str = "legendre") -> GHData:
    """Extended GH data from L and basic shifts phi_I(x)."""
    return GHData(L.m, lambda x: higgs_from_L(L, x), lambda x: connection_from_L(L, phi, x), name=name)


def gauge_kernel_residual(u: Callable, x, psi=None, scheme: DerivScheme = DerivScheme(DUAL), detail: bool = False):
    """max_I |(L_1 + i L_0) u_I| and |(L_2 + i L_3) u_I| at fixed psi.

    ``u(x, psi)`` returns the m complex values u_I.
    """
    x = np.asarray(x, dtype=float)
    m = x.shape[0]
    psi = np.zeros(m) if psi is None else np.asarray(psi, dtype=float)
    grad = np.asarray(partials(lambda y: u(y.reshape(m, 3), psi), x.ravel(), scheme))  # (3m, m)
    gens = complex_generators(x).reshape(2, 3 * m)
    vals = gens @ grad
    res = {"L1+iL0": sup(vals[0]), "L2+iL3": sup(vals[1])}
    worst = max(res.values())
    return (worst, res) if detail else worst


def kappa_potential(L: LPotential, scheme: DerivScheme | None = None) -> ConePotential:
    """kappa = L - x^I L_{x^I} as a function of the configuration.

    Differentiating kappa needs a second derivative layer, so the result uses
    central differences over a dual-number gradient.
    """
    m = L.m

    def fn(x):
        x = np.asarray(x, dtype=float).reshape(m, 3)
        return L(x) - float(x[:, 0] @ L.Lx(x))

    return ConePotential(m, fn, scheme or DerivScheme(order=4, h=1e-3))


# ---------------------------------------------------------------- built-ins


def quadratic_L(N, M=None) -> LPotential:
    """L = 1/2 N_IJ (x^I x^J - 2 Re z^I zbar^J) + Im(M_IJ x^I zbar^J), N real and M complex symmetric."""
    N = np.asarray(N, dtype=float)
    m = N.shape[0]
    M = np.zeros((m, m), dtype=complex) if M is None else np.asarray(M, dtype=complex)

    def fn(x):
        xr = x[:, 0]
        a, b = x[:, 1], x[:, 2]
        # 2 Re(z^I zbar^J) = (a^I a^J + b^I b^J) / 2
        q = 0.5 * (xr @ N @ xr) - 0.25 * (a @ N @ a + b @ N @ b)
        # Im(M x zbar) with zbar = (a - i b) / 2
        t = 0.5 * (xr @ M.real @ b) * (-1.0) + 0.5 * (xr @ M.imag @ a)
        return q + t

    return LPotential(m, fn)


def norm_L(m: int = 1) -> LPotential:
    """L = sum_I |x^I|, homogeneous of degree one and rotation invariant."""
    return LPotential(m, lambda x: sum(np.sqrt(x[I] @ x[I]) for I in range(m)))
