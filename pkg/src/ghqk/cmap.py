"""Quaternionic Kaehler metrics from a holomorphic prepotential (local c-map).

Upstairs (the hyperkaehler cone) a point is a configuration x of shape
(n + 1, 3) together with fiber coordinates psi.  Index 0 is the distinguished
zero-indexed point; A = 1..n label the rest.  The fiber coordinate used for
psi_0 is psi_0' = psi_0 - psi_tilde^A psi_A / 2, in which the connection is
basic and alpha = dpsi_0' + psi_tilde^A dpsi_A.

Downstairs the chart is that of module qk: the free canonical coordinates
(rho^1_1, rho^1_2, rho^A_1, rho^A_2, rho^A_3 for A >= 2) followed by
(psi_0', psi_1, ..., psi_n).  On it psi_tilde^A = rho^A_1 and
X^A = (rho^A_2 + i rho^A_3) / 2.

Functions of the configuration are written with ring operations only, so the
same code evaluates on floats and on (nested) dual numbers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import dual, imhp, legendre
from .dual import Dual, imag_part, real_part
from .excalc import CENTRAL, DUAL, DerivScheme, MetricField, VectorField, bracket, lie_metric, partials, sup
from .gh import GHData
from .qk import ReducedData, qk_structure, theta

log = logging.getLogger(__name__)

# first derivatives of the closed-form data: a 5-point stencil keeps truncation error near 1e-10
CMAP_SCHEME = DerivScheme(CENTRAL, 1e-4, 4)

__all__ = [
    "Prepotential",
    "DegenerateConfigurationError",
    "QuadratureError",
    "CmapDomainError",
    "quadratic_prepotential",
    "monomial_prepotential",
    "plugin_prepotential",
    "prepotential_from_config",
    "homogeneity_residual",
    "roots_zeta0",
    "eta",
    "chi",
    "chi_explicit",
    "chi_vectorial",
    "psi_tilde",
    "chi_differential",
    "L_closed",
    "L_contour",
    "cmap_L",
    "identity_suite",
    "hk_potential_cmap",
    "shifts",
    "shifts_and_coords",
    "holomorphic_coords",
    "heisenberg_upstairs",
    "dual_map",
    "dualization",
    "tau",
    "imtau_inverse",
    "connection_1forms",
    "higgs_matrix",
    "cmap_gh",
    "legendre_cmap_gh",
    "reduce_cmap",
    "FSData",
    "fs_assemble",
    "fs_checks",
    "downstairs_generators",
    "heisenberg_downstairs",
    "signature_check",
    "end_to_end_residual",
    "random_base_point",
    "random_cone_point",
]


class DegenerateConfigurationError(ValueError):
    """x^0 vanishes or z^0 = 0, where the chi variables are undefined."""


class QuadratureError(RuntimeError):
    """Contour radius could not be chosen to isolate the poles."""


class CmapDomainError(ValueError):
    """R = 0, singular Im F_AB or singular Im tau."""


# ---------------------------------------------------------------- scalar helpers


def _sv(v) -> complex:
    """Numeric value of a float, complex or nested dual."""
    while isinstance(v, Dual):
        v = v.val
    return v


_re = real_part
_im = imag_part


def _sqrt(v):
    return v.sqrt() if isinstance(v, Dual) else np.sqrt(v)


def _dot(a, b):
    return sum(a[k] * b[k] for k in range(len(a)))


def _cross(a, b):
    return [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]


def _arr(x):
    x = np.asarray(x)
    return x if x.dtype == object else x.astype(float)


def _parts(x):
    """(z, x1, zbar) per point, as lists."""
    m = x.shape[0]
    z = [0.5 * (x[I, 1] + 1j * x[I, 2]) for I in range(m)]
    zb = [0.5 * (x[I, 1] - 1j * x[I, 2]) for I in range(m)]
    return z, [x[I, 0] for I in range(m)], zb


# ---------------------------------------------------------------- prepotentials


def _pack(items) -> np.ndarray:
    """Numeric array unless some entry is a dual number."""
    if any(isinstance(v, Dual) or (isinstance(v, np.ndarray) and v.dtype == object) for v in items):
        return np.array(items, dtype=object)
    return np.array(items, dtype=complex)


def _conj_in(eta) -> np.ndarray:
    eta = np.asarray(eta)
    return np.conj(eta if eta.dtype == object else eta.astype(complex))


@dataclass
class Prepotential:
    """Holomorphic F(eta^1..eta^n), homogeneous of degree two, with F_A and F_AB."""

    n: int
    family: str
    F: Callable
    FA: Callable
    FAB: Callable
    params: dict = field(default_factory=dict)
    lower_precision: bool = False

    def Fbar(self, eta):
        """The conjugate function conj(F(conj eta))."""
        return np.conj(self.F(_conj_in(eta)))

    def FAbar(self, eta):
        return np.conj(self.FA(_conj_in(eta)))

    def N(self, eta) -> np.ndarray:
        return np.imag(np.asarray(self.FAB(eta), dtype=complex))

    def dual(self) -> "Prepotential":
        """Minus the Legendre transform (quadratic family only)."""
        if self.family != "quadratic":
            raise NotImplementedError("explicit dual prepotential is available for the quadratic family")
        return quadratic_prepotential(-np.linalg.inv(self.params["C"]))


def quadratic_prepotential(C) -> Prepotential:
    """F = 1/2 C_AB eta^A eta^B with C complex symmetric."""
    C = np.atleast_2d(np.asarray(C, dtype=complex))
    if sup(C - C.T) > 0:
        raise ValueError("C must be symmetric")
    n = C.shape[0]

    def FA(eta):
        return _pack([sum(C[A, B] * eta[B] for B in range(n)) for A in range(n)])

    def F(eta):
        fa = FA(eta)
        return 0.5 * sum(fa[A] * eta[A] for A in range(n))

    return Prepotential(n, "quadratic", F, FA, lambda eta: C.copy(), {"C": C})


def _monomial(c, powers, eta):
    out = c
    for A, p in enumerate(powers):
        if float(p).is_integer():
            k = int(p)
            for _ in range(abs(k)):
                out = out * eta[A] if k > 0 else out / eta[A]
        else:
            out = out * eta[A] ** p
    return out


def monomial_prepotential(c, powers) -> Prepotential:
    """F = c prod_A (eta^A)^(p_A) with sum p_A = 2."""
    powers = [float(p) for p in powers]
    if abs(sum(powers) - 2.0) > 1e-12:
        raise ValueError("powers must sum to 2")
    n = len(powers)
    c = complex(c)

    def F(eta):
        return _monomial(c, powers, eta)

    def FA(eta):
        f = F(eta)
        return _pack([powers[A] * f / eta[A] for A in range(n)])

    def FAB(eta):
        f = F(eta)
        out = np.empty((n, n), dtype=object)
        for A in range(n):
            for B in range(n):
                out[A, B] = powers[A] * (powers[B] - (A == B)) * f / (eta[A] * eta[B])
        if all(not isinstance(v, Dual) for v in out.ravel()):
            return out.astype(complex)
        return out

    return Prepotential(n, "monomial", F, FA, FAB, {"c": c, "powers": powers})


def _holo_partial(f, eta, k):
    e = [Dual(eta[j], 1.0 if j == k else 0.0) for j in range(len(eta))]
    y = f(np.array(e, dtype=object))
    return y.eps if isinstance(y, Dual) else 0.0


def plugin_prepotential(fn: Callable, n: int) -> Prepotential:
    """User F; F_A and F_AB by holomorphic dual numbers (flagged lower precision)."""

    def FA(eta):
        return _pack([_holo_partial(fn, eta, A) for A in range(n)])

    def FAB(eta):
        out = np.empty((n, n), dtype=object)
        for A in range(n):
            for B in range(n):
                out[A, B] = _holo_partial(lambda e: _holo_partial(fn, e, A), eta, B)
        if all(not isinstance(v, Dual) for v in out.ravel()):
            return out.astype(complex)
        return out

    return Prepotential(n, "plugin", fn, FA, FAB, {}, lower_precision=True)


def prepotential_from_config(cfg: dict) -> Prepotential:
    """{"family": "quadratic", "C": [[re, im], ...]} or {"family": "monomial", "c": [re, im], "powers": [...]}."""
    fam = cfg.get("family")
    if fam == "quadratic":
        C = np.asarray(cfg["C"], dtype=float)
        if C.shape[-1] != 2:
            raise ValueError("C entries must be [re, im] pairs")
        n = int(round(np.sqrt(C.size // 2)))
        if n * n * 2 != C.size:
            raise ValueError("C must hold n x n complex entries")
        C = C.reshape(n, n, 2)
        return quadratic_prepotential(C[..., 0] + 1j * C[..., 1])
    if fam == "monomial":
        c = cfg.get("c", [1.0, 0.0])
        return monomial_prepotential(complex(c[0], c[1]), cfg["powers"])
    raise ValueError(f"unknown prepotential family {fam!r}")


def homogeneity_residual(F: Prepotential, eta) -> float:
    """|F_A eta^A - 2F| and |F_AB eta^B - F_A|."""
    eta = np.asarray(eta, dtype=complex)
    fa = np.asarray(F.FA(eta), dtype=complex)
    fab = np.asarray(F.FAB(eta), dtype=complex)
    return max(abs(fa @ eta - 2.0 * complex(F.F(eta))), sup(fab @ eta - fa))


# ---------------------------------------------------------------- twistor variables


def roots_zeta0(z0, x0, zb0):
    """(zeta_+, zeta_-), the roots of eta^0, with r^0 the positive root."""
    r0 = _sqrt(x0 * x0 + 4.0 * z0 * zb0)
    if abs(_sv(r0)) == 0:
        raise DegenerateConfigurationError("x^0 vanishes")
    if abs(_sv(zb0)) == 0:
        log.warning("z^0 = 0: zeta_- is at infinity")
        return -2.0 * z0 / (x0 + r0), complex(np.inf)
    xv = np.real(_sv(x0))
    zp = (x0 - r0) / (2.0 * zb0) if xv <= 0 else -2.0 * z0 / (x0 + r0)
    zm = (x0 + r0) / (2.0 * zb0) if xv > 0 else -2.0 * z0 / (x0 - r0)
    return zp, zm


def eta(zeta, z, x, zb):
    return z / zeta + x - zb * zeta


def _r0(x):
    return _sqrt(_dot(x[0], x[0]))


def chi(x) -> tuple[np.ndarray, np.ndarray]:
    """(chi^A, chibar^A) = eta^A(zeta_pm) / r^0."""
    x = _arr(x)
    z, xr, zb = _parts(x)
    if abs(_sv(z[0])) == 0:
        raise DegenerateConfigurationError("z^0 = 0")
    zp, zm = roots_zeta0(z[0], xr[0], zb[0])
    r0 = _r0(x)
    n = x.shape[0] - 1
    c = np.array([eta(zp, z[A], xr[A], zb[A]) / r0 for A in range(1, n + 1)], dtype=object)
    cb = np.array([eta(zm, z[A], xr[A], zb[A]) / r0 for A in range(1, n + 1)], dtype=object)
    if x.dtype != object:
        return c.astype(complex), cb.astype(complex)
    return c, cb


def chi_explicit(x) -> np.ndarray:
    """chi^A = x^A / r0 - (x^0 / r0) Re(z^A / z^0) - i Im(z^A / z^0)."""
    x = _arr(x)
    z, xr, _ = _parts(x)
    r0 = _r0(x)
    out = []
    for A in range(1, x.shape[0]):
        w = z[A] / z[0]
        out.append(xr[A] / r0 - xr[0] / r0 * _re(w) - 1j * _im(w))
    return np.array(out, dtype=complex if x.dtype != object else object)


def chi_vectorial(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    e1 = np.array([1.0, 0.0, 0.0])
    x0 = x[0]
    r0 = np.linalg.norm(x0)
    c0 = np.cross(x0, e1)
    out = []
    for A in range(1, x.shape[0]):
        num = np.cross(x0, x[A]) @ c0 - 1j * r0 * (x0 @ np.cross(x[A], e1))
        out.append(num / (r0 * (c0 @ c0)))
    return np.array(out)


def psi_tilde(x) -> np.ndarray:
    x = _arr(x)
    d = _dot(x[0], x[0])
    out = [_dot(x[0], x[A]) / d for A in range(1, x.shape[0])]
    return np.array(out, dtype=float if x.dtype != object else object)


def chi_differential(x) -> np.ndarray:
    """d chi^A on the base from the spherical-basis formula; complex, shape (n, m, 3)."""
    x = np.asarray(x, dtype=float)
    m = x.shape[0]
    z, xr, zb = _parts(x)
    zp, _ = roots_zeta0(z[0], xr[0], zb[0])
    r0 = _r0(x)
    c, _ = chi(x)
    pt = psi_tilde(x)
    # d eta_m for m = +1, 0, -1 as covectors on the base (m, 3)
    def deta(I, k):
        out = np.zeros((m, 3), dtype=complex)
        if k == 1:
            out[I, 1], out[I, 2] = 0.5, 0.5j
        elif k == 0:
            out[I, 0] = 1.0
        else:
            out[I, 1], out[I, 2] = -0.5, 0.5j
        return out

    res = np.zeros((m - 1, m, 3), dtype=complex)
    for A in range(1, m):
        for k in (1, 0, -1):
            res[A - 1] += zp ** (-k) * (deta(A, k) + (k * c[A - 1] - pt[A - 1]) * deta(0, k))
    return res / r0


# ---------------------------------------------------------------- L potential


def L_closed(F: Prepotential, x):
    """L = 2 r^0 Im F(chi)."""
    x = _arr(x)
    c, _ = chi(x)
    return 2.0 * _r0(x) * _im(F.F(c))


def _singular_points(F: Prepotential, x) -> list[complex]:
    """Zeros of eta^A where F has negative powers."""
    pts = [0.0]
    if F.family == "monomial":
        z, xr, zb = _parts(np.asarray(x, dtype=float))
        for A, p in enumerate(F.params["powers"]):
            if p < 0:
                # -zb zeta^2 + x zeta + z = 0
                pts.extend(np.roots([-zb[A + 1], xr[A + 1], z[A + 1]]).tolist())
    return pts


def _circle(f, center, radius, npts, sign):
    """Trapezoid value of the loop integral of f; sign +1 anticlockwise."""
    th = 2.0 * np.pi * np.arange(npts) / npts
    zeta = center + radius * np.exp(1j * th)
    return sign * 2j * np.pi / npts * complex(np.sum(f(zeta) * (zeta - center)))


def L_contour(F: Prepotential, x, npts: int = 2048, detail: bool = False):
    """Trapezoid quadrature of the contour integral for L.

    The circles run anticlockwise around zeta_+ for the F term and clockwise
    around zeta_- for the Fbar term.  The overall normalization is -1/(2 pi),
    the sign for which the integral reproduces 2 r^0 Im F(chi).
    """
    x = np.asarray(x, dtype=float)
    z, xr, zb = _parts(x)
    zp, zm = roots_zeta0(z[0], xr[0], zb[0])
    n = x.shape[0] - 1
    sing = _singular_points(F, x)

    def integrand(fun):
        def f(zeta):
            et = np.array([eta(zeta, z[A], xr[A], zb[A]) for A in range(1, n + 1)])
            e0 = eta(zeta, z[0], xr[0], zb[0])
            return fun(et) / (e0 * zeta)

        return f

    fF = integrand(F.F)
    fB = integrand(F.Fbar)

    def radius(c, others):
        return 0.5 * min(abs(c - o) for o in others)

    rp = radius(zp, sing + [zm])
    rm = radius(zm, sing + [zp])
    scale = 2.0 * np.linalg.norm(x[0])
    mismatch = np.inf
    for _ in range(20):
        v1 = _circle(fF, zp, rp, npts, +1) - _circle(fB, zm, rm, npts, -1)
        v2 = _circle(fF, zp, rp / 2, npts, +1) - _circle(fB, zm, rm / 2, npts, -1)
        mismatch = abs(v1 - v2)
        if mismatch <= 1e-10 * max(1.0, abs(v1)):
            break
        rp, rm = rp / 2, rm / 2
    else:
        raise QuadratureError(f"contour radii do not isolate the poles (mismatch {mismatch:.3e})")
    val = -v1 / (2.0 * np.pi)
    if abs(val.imag) > 1e-8 * max(1.0, abs(val.real)) * scale:
        raise QuadratureError(f"contour integral not real ({val.imag:.3e})")
    if detail:
        return float(val.real), {"mismatch": float(mismatch), "imag": float(val.imag), "radii": (rp, rm)}
    return float(val.real)


@dataclass
class _MemoLPotential(legendre.LPotential):
    """LPotential whose Hessian is cached per configuration (Higgs field and connection share it)."""

    _memo: dict = field(default_factory=dict, repr=False)

    def hessian(self, x) -> np.ndarray:
        key = np.asarray(x, dtype=float).tobytes()
        if key not in self._memo:
            if len(self._memo) > 64:
                self._memo.clear()
            self._memo[key] = super().hessian(x)
        return self._memo[key]


def cmap_L(F: Prepotential, method: str = "closed") -> legendre.LPotential:
    """L as a legendre.LPotential; the contour version is differentiated by wide differences."""
    m = F.n + 1
    if method == "closed":
        return legendre.LPotential(m, lambda x: L_closed(F, x))
    if method == "contour":
        return _MemoLPotential(m, lambda x: L_contour(F, x), DerivScheme(CENTRAL, 2e-3, 4))
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------- upstairs quantities


def hk_potential_cmap(F: Prepotential, x, detail: bool = False):
    """U = -(4 |z0|^2 / r0) Im[chibar^A F_A(chi)], checked against the invariant form."""
    x = _arr(x)
    c, cb = chi(x)
    z, _, zb = _parts(x)
    r0 = _r0(x)
    fa = F.FA(c)
    U1 = -4.0 * z[0] * zb[0] / r0 * _im(_dot(cb, fa))
    if not detail:
        return _re(U1)
    xf = np.asarray(x, dtype=float)
    N = F.N(c)
    cr = np.array([np.cross(xf[0], xf[A]) for A in range(1, xf.shape[0])])
    U2 = -np.einsum("Aa,Ba,AB->", cr, cr, N) / np.linalg.norm(xf[0]) ** 3
    return float(np.real(U1)), {"chi_expr": float(np.real(U1)), "invariant": float(U2), "diff": abs(float(np.real(U1)) - U2)}


def shifts(F: Prepotential, x) -> np.ndarray:
    """phi_A = (x0/r0) Re F_A(chi) and the basic part phi_0' of phi_0; shape (m,)."""
    x = _arr(x)
    c, _ = chi(x)
    _, xr, _ = _parts(x)
    r0 = _r0(x)
    fa = F.FA(c)
    pt = psi_tilde(x)
    n = x.shape[0] - 1
    xd = xr[0] / r0
    phiA = [xd * _re(fa[A]) for A in range(n)]
    phi0 = sum(
        -pt[A] * phiA[A] + 0.5 * xd * xd * _re(c[A]) * _re(fa[A]) - 0.5 * _im(c[A]) * _im(fa[A]) for A in range(n)
    )
    return np.array([phi0] + phiA, dtype=object if x.dtype == object else float)


def _L_x(F: Prepotential, x):
    """(L_{x^I}) from L_{x^A} = 2 Im F_A(chi) and (x0 . x^I) L_{x^I} = x^0 L."""
    x = _arr(x)
    c, _ = chi(x)
    fa = F.FA(c)
    n = x.shape[0] - 1
    LA = [2.0 * _im(fa[A]) for A in range(n)]
    L = 2.0 * _r0(x) * _im(F.F(c))
    d00 = _dot(x[0], x[0])
    L0 = (x[0, 0] * L - sum(_dot(x[0], x[A + 1]) * LA[A] for A in range(n))) / d00
    return [L0] + LA


def holomorphic_coords(F: Prepotential, x, psi):
    """(z^I, u_I) with u_I = psi_I + phi_I + (i/2) L_{x^I} and psi_0 read as psi_0'."""
    x = _arr(x)
    z, _, _ = _parts(x)
    ph = shifts(F, x)
    Lx = _L_x(F, x)
    u = [psi[I] + ph[I] + 0.5j * Lx[I] for I in range(x.shape[0])]
    kind = object if x.dtype == object or np.asarray(psi).dtype == object else complex
    return np.array(z, dtype=kind), np.array(u, dtype=kind)


def shifts_and_coords(F: Prepotential, x, psi, detail: bool = True) -> dict:
    """Shifts, psi_tilde, u_I and the checks tied to them."""
    x = np.asarray(x, dtype=float)
    psi = np.asarray(psi, dtype=float)
    n = x.shape[0] - 1
    c, cb = chi(x)
    fa = np.asarray(F.FA(c), dtype=complex)
    fab_c = np.conj(np.asarray(F.FA(np.conj(cb)), dtype=complex))  # Fbar_A(chibar)
    z, xr, _ = _parts(x)
    r0 = float(np.real(_r0(x)))
    pt = psi_tilde(x)
    ph = shifts(F, x)
    zz, u = holomorphic_coords(F, x, psi)
    psi0 = psi[0] + 0.5 * pt @ psi[1:]  # unprimed psi_0
    ut = np.array(z[1:]) / z[0]
    # u_A as the dual of the psi-tilde identity
    uA_alt = psi[1:] + (xr[0] + r0) / (2 * r0) * fa + (xr[0] - r0) / (2 * r0) * fab_c
    # u_0 from the self-dual choice of psi_0
    u0_alt = psi0 + 0.5 * (psi[1:] @ ut - pt @ u[1:]) - 0.5 * (u[1:] @ ut)
    # shift_0 relation with the unprimed phi_0 = phi_0' - psi_tilde psi / 2
    phi0 = ph[0] - 0.5 * pt @ psi[1:]
    rhs = 0.5 * (xr[0] / r0) ** 2 * np.real(c) @ np.real(fa) - 0.5 * np.imag(c) @ np.imag(fa) - 0.5 * pt @ psi[1:]
    out = {
        "phi": ph,
        "psi_tilde": pt,
        "u": u,
        "z": zz,
        "psi0": psi0,
        "u_A_dual_identity": sup(u[1:] - uA_alt),
        "u_0_self_dual": abs(u[0] - u0_alt),
        "shift_0": abs(phi0 + pt @ ph[1:] - rhs),
        "psi_tilde_dual": sup(np.real(ut) - (pt - xr[0] / r0 * np.real(c))),
    }
    return out


def higgs_matrix(F: Prepotential, x) -> np.ndarray:
    """U_IJ = -(1/r0) [[R + pt N pt, -pt N], [-N pt, N]] with R = U / (2 r0)."""
    x = np.asarray(x, dtype=float)
    c, _ = chi(x)
    N = F.N(c)
    r0 = np.linalg.norm(x[0])
    R = hk_potential_cmap(F, x) / (2.0 * r0)
    pt = psi_tilde(x)
    n = x.shape[0] - 1
    out = np.zeros((n + 1, n + 1))
    out[0, 0] = R + pt @ N @ pt
    out[0, 1:] = -pt @ N
    out[1:, 0] = -N @ pt
    out[1:, 1:] = N
    return -out / r0


def _grad(fn, x):
    """Dual gradient of a (possibly complex, array-valued) function of the base; axis 0 is the coordinate."""
    x = np.asarray(x, dtype=float)
    m = x.shape[0]
    return np.asarray(dual.gradient(lambda y: fn(y.reshape(m, 3)), x.ravel()))


def connection_1forms(F: Prepotential, x) -> np.ndarray:
    """Basic connection A_I of shape (m, m, 3) from the closed-form expressions.

    A_A = Re F_AB dpt^B - Im F_AB [Im chi^B dx0d + 4 Re chi^B Im(zb0d dz0d)] and
    A_0' = -pt^A A_A + 2 Im F_AB [|z0d|^2 Im(chibar^A dchi^B) + chibar^A chi^B x0d Im(zb0d dz0d)],
    with x0d = x^0 / r^0 and z0d = z^0 / r^0.
    """
    x = np.asarray(x, dtype=float)
    m = x.shape[0]
    n = m - 1
    c, cb = chi(x)
    fab = np.asarray(F.FAB(c), dtype=complex)
    N = fab.imag
    pt = psi_tilde(x)
    z, xr, zb = _parts(x)
    r0 = np.linalg.norm(x[0])
    x0d, z0d, zb0d = xr[0] / r0, z[0] / r0, zb[0] / r0
    dpt = _grad(psi_tilde, x).T.reshape(n, m, 3)
    dx0d = _grad(lambda y: y[0, 0] / _r0(y), x).reshape(m, 3)
    dz0d = _grad(lambda y: 0.5 * (y[0, 1] + 1j * y[0, 2]) / _r0(y), x).reshape(m, 3)
    dchi = chi_differential(x)
    imz = np.imag(zb0d * dz0d)
    A = np.zeros((m, m, 3))
    for a in range(n):
        A[a + 1] = np.einsum("b,bJj->Jj", fab[a].real, dpt) - np.einsum(
            "b,Jj->Jj", N[a] * np.imag(c), dx0d
        ) - 4.0 * (N[a] @ np.real(c)) * imz
    t = np.zeros((m, 3))
    for a in range(n):
        for b in range(n):
            t += 2.0 * N[a, b] * (abs(z0d) ** 2 * np.imag(np.conj(c[a]) * dchi[b]) + np.real(cb[a] * c[b]) * x0d * imz)
    A[0] = t - np.einsum("a,aJj->Jj", pt, A[1:])
    return A


def cmap_gh(F: Prepotential) -> GHData:
    """Gauge-fixed GH data on the cone from the closed-form Higgs field and connection."""
    return GHData(F.n + 1, lambda x: higgs_matrix(F, x), lambda x: connection_1forms(F, x), name=f"cmap-{F.family}")


def legendre_cmap_gh(F: Prepotential, method: str = "closed") -> GHData:
    """GH data from the Legendre transform construction with the shifts phi_I."""
    L = cmap_L(F, method)
    return legendre.legendre_gh(L, lambda x: shifts(F, x), name=f"legendre-cmap-{F.family}")


# ---------------------------------------------------------------- identities


def _kernel_ops(fn, x) -> np.ndarray:
    """((L_1 + i L_0) f, (L_2 + i L_3) f) for a complex array-valued f of the base."""
    x = np.asarray(x, dtype=float)
    g = _grad(fn, x)  # (3m, ...)
    gens = legendre.complex_generators(x).reshape(2, -1)
    return np.tensordot(gens, g, axes=(1, 0))


def identity_suite(F: Prepotential, x, detail: bool = True):
    """Sup-norm residuals of the twistor-variable identities at a configuration."""
    x = np.asarray(x, dtype=float)
    m = x.shape[0]
    n = m - 1
    z, xr, zb = _parts(x)
    zp, zm = roots_zeta0(z[0], xr[0], zb[0])
    r0 = np.linalg.norm(x[0])
    c, cb = chi(x)
    res = {}
    res["roots"] = max(abs(eta(zp, z[0], xr[0], zb[0])), abs(eta(zm, z[0], xr[0], zb[0])))
    res["antipodal"] = abs(zm + 1.0 / np.conj(zp))
    res["chi_conjugate"] = sup(cb - np.conj(c))
    res["chi_explicit"] = sup(c - chi_explicit(x))
    res["chi_vectorial"] = sup(c - chi_vectorial(x))
    e1 = np.array([1.0, 0.0, 0.0])
    c0 = np.cross(x[0], e1)
    cr = [np.cross(x[0], x[A]) for A in range(1, m)]
    ccb, crat = 0.0, 0.0
    for a in range(n):
        for b in range(n):
            num = cr[a] @ cr[b] - 1j * r0 * (x[0] @ np.cross(x[a + 1], x[b + 1]))
            ccb = max(ccb, abs(c[a] * cb[b] - num / (r0**2 * (c0 @ c0))))
            crat = max(crat, abs(c[a] / c[b] - num / (cr[b] @ cr[b])))
    res["chi_chibar"] = ccb
    res["chi_ratio"] = crat
    res["chi_diff"] = sup(chi_differential(x) - _grad(lambda y: chi(y)[0], x).T.reshape(n, m, 3))
    # kernel memberships
    kern = {
        "z^A/z^0": lambda y: np.array([(0.5 * (y[A, 1] + 1j * y[A, 2])) / (0.5 * (y[0, 1] + 1j * y[0, 2])) for A in range(1, m)], dtype=object),
        "chi_plus": lambda y: (y[0, 0] + _r0(y)) / (2.0 * _r0(y)) * chi(y)[0],
        "chi_minus": lambda y: (y[0, 0] - _r0(y)) / (2.0 * _r0(y)) * chi(y)[1],
    }
    for k, f in kern.items():
        res[f"kernel[{k}]"] = sup(_kernel_ops(f, x))
    zpm = _kernel_ops(lambda y: np.array(roots_zeta0(*[v[0] for v in _parts(y)]), dtype=object), x)
    res["zeta_generators"] = max(sup(zpm[0] + 1j * np.array([zp, zm])), sup(zpm[1] - 1j * np.array([zp, zm]) ** 2))
    kc = _kernel_ops(lambda y: chi(y)[0], x)
    kcb = _kernel_ops(lambda y: chi(y)[1], x)
    res["chi_generators"] = max(sup(kc[0]), sup(kcb[0]), sup(kc[1] - 1j * zp * c), sup(kcb[1] - 1j * zm * cb))
    pt = psi_tilde(x)
    res["psi_tilde_identity"] = sup(
        np.array(z[1:]) / z[0] + (xr[0] + r0) / (2 * r0) * c + (xr[0] - r0) / (2 * r0) * cb - pt
    )
    L = cmap_L(F)
    Lx = L.Lx(x)
    fa = np.asarray(F.FA(c), dtype=complex)
    res["L_x^A"] = sup(Lx[1:] - 2.0 * fa.imag)
    res["L_prop"] = abs(sum((x[0] @ x[I]) * Lx[I] for I in range(m)) - xr[0] * L(x))
    _, pots = hk_potential_cmap(F, x, detail=True)
    res["U_forms"] = pots["diff"]
    res["U_vs_higgs"] = abs(pots["chi_expr"] - 2.0 * np.einsum("IJ,Ia,Ja->", higgs_matrix(F, x), x, x))
    scale = max(1.0, abs(pots["chi_expr"]))
    res["U_forms"] /= scale
    res["U_vs_higgs"] /= scale
    worst = max(res.values())
    return (worst, res) if detail else worst


# ---------------------------------------------------------------- Heisenberg algebra upstairs


def _hol_real(F: Prepotential, p) -> np.ndarray:
    """Real coordinates (Re z, Im z, Re u, Im u) of an upstairs chart point."""
    p = np.asarray(p)
    m = F.n + 1
    x = p[: 3 * m].reshape(m, 3)
    z, u = holomorphic_coords(F, x, p[3 * m :])
    return np.concatenate([_re(z), _im(z), _re(u), _im(u)]) if p.dtype == object else np.concatenate(
        [np.real(z), np.imag(z), np.real(u), np.imag(u)]
    )


def _adapted(F: Prepotential, p) -> np.ndarray:
    """Duality-adapted coordinates (psi_0, x^0, psi_A, psi_tilde^A, Re chi^A, Im chi^A)."""
    p = np.asarray(p)
    m = F.n + 1
    x = p[: 3 * m].reshape(m, 3)
    psi = p[3 * m :]
    pt = psi_tilde(x)
    c, _ = chi(x)
    psi0 = psi[0] + 0.5 * _dot(pt, psi[1:])
    parts = [[psi0], list(x[0]), list(psi[1:]), list(pt), [_re(v) for v in c], [_im(v) for v in c]]
    return np.array([v for part in parts for v in part], dtype=object if p.dtype == object else float)


def _jac(fn, p) -> np.ndarray:
    """J[a, mu] = d fn_a / d p_mu by dual numbers."""
    return np.real(np.asarray(dual.gradient(fn, np.asarray(p, dtype=float)))).T


def _hol_field(F: Prepotential, name: str, A: int | None = None) -> VectorField:
    """Heisenberg generator defined in holomorphic coordinates, expressed on the GH chart."""
    m = F.n + 1
    dim = 4 * m

    def fn(p):
        p = np.asarray(p, dtype=float)
        x = p[: 3 * m].reshape(m, 3)
        z, u = holomorphic_coords(F, x, p[3 * m :])
        vz = np.zeros(m, dtype=complex)
        vu = np.zeros(m, dtype=complex)
        if name == "Q":
            vu[A] = 1.0
        elif name == "I":
            vu[0] = 1.0
        elif name == "P":
            vz[A] = z[0]
            vu[0] = -u[A]
        elif name == "W":
            vz[0] = 2.0 * z[0]
            vz[1:] = z[1:]
            vu[0] = -2.0 * u[0]
            vu[1:] = -u[1:]
        comp = np.concatenate([vz.real, vz.imag, vu.real, vu.imag])
        return np.linalg.solve(_jac(lambda q: _hol_real(F, q), p), comp)

    return VectorField(dim, fn)


def _adapted_field(F: Prepotential, name: str, A: int | None = None) -> VectorField:
    """The same generator from its duality-adapted coordinate form."""
    m = F.n + 1
    n = F.n
    dim = 4 * m

    def fn(p):
        p = np.asarray(p, dtype=float)
        y = _adapted(F, p)
        v = np.zeros(dim)
        i_psi0, i_x0, i_psi, i_pt, i_chi = 0, 1, 4, 4 + n, 4 + 2 * n
        if name == "Q":
            v[i_psi + A - 1] = 1.0
            v[i_psi0] = 0.5 * y[i_pt + A - 1]
        elif name == "I":
            v[i_psi0] = 1.0
        elif name == "P":
            v[i_pt + A - 1] = 1.0
            v[i_psi0] = -0.5 * y[i_psi + A - 1]
        elif name == "W":
            v[i_psi0] = -2.0 * y[i_psi0]
            v[i_x0 : i_x0 + 3] = 2.0 * y[i_x0 : i_x0 + 3]
            v[i_psi:] = -y[i_psi:]
        return np.linalg.solve(_jac(lambda q: _adapted(F, q), p), v)

    return VectorField(dim, fn)


def heisenberg_upstairs(F: Prepotential, p, scheme: DerivScheme = DerivScheme(CENTRAL, 1e-3, 4), detail: bool = True):
    """Graded Heisenberg algebra of Q^A, P_A, I, W on the cone and invariance of U."""
    m = F.n + 1
    n = F.n
    p = np.asarray(p, dtype=float)
    Q = [_hol_field(F, "Q", A) for A in range(1, m)]
    P = [_hol_field(F, "P", A) for A in range(1, m)]
    I = _hol_field(F, "I")
    W = _hol_field(F, "W")
    br = lambda X, Y: bracket(X, Y, scheme)(p)
    res = {}
    alg = 0.0
    Iv = I(p)
    for a in range(n):
        for b in range(n):
            alg = max(alg, sup(br(P[a], Q[b]) - (a == b) * Iv))
            alg = max(alg, sup(br(P[a], P[b])), sup(br(Q[a], Q[b])))
        alg = max(alg, sup(br(W, P[a]) - P[a](p)), sup(br(W, Q[a]) - Q[a](p)))
    alg = max(alg, sup(br(W, I) - 2.0 * Iv))
    res["algebra"] = alg
    x = p[: 3 * m].reshape(m, 3)
    gU = _grad(lambda y: hk_potential_cmap(F, y), x).ravel()
    res["U_invariance"] = max(abs(V(p)[: 3 * m] @ gU) for V in Q + P + [I, W])
    adapted = [("Q", A) for A in range(1, m)] + [("P", A) for A in range(1, m)] + [("I", None), ("W", None)]
    res["adapted_vs_holomorphic"] = max(
        sup(_adapted_field(F, k, A)(p) - _hol_field(F, k, A)(p)) for k, A in adapted
    )
    # horizontal parts: P_A -> x^0 . d/dx^A and W -> 2 x^0 . d/dx^0 + x^A . d/dx^A
    hp = 0.0
    for a in range(n):
        h = np.zeros((m, 3))
        h[a + 1] = x[0]
        hp = max(hp, sup(P[a](p)[: 3 * m] - h.ravel()))
    h = x.copy()
    h[0] *= 2.0
    hp = max(hp, sup(W(p)[: 3 * m] - h.ravel()))
    res["horizontal_parts"] = hp
    worst = max(res.values())
    return (worst, res) if detail else worst


# ---------------------------------------------------------------- dualization


def dual_map(z, u) -> tuple[np.ndarray, np.ndarray]:
    """(z, u) -> (z~, u~): u~^A = z^A/z^0, z~_A = -z^0 u_A, u~_0 = u_0 + u~^A u_A, z~^0 = z^0."""
    z = np.asarray(z)
    u = np.asarray(u)
    if abs(_sv(z[0])) == 0:
        raise DegenerateConfigurationError("dual chart needs z^0 != 0")
    kind = object if z.dtype == object or u.dtype == object else complex
    ut = [z[A] / z[0] for A in range(1, len(z))]
    zt = [z[0]] + [-z[0] * u[A] for A in range(1, len(u))]
    u0 = u[0] + sum(ut[A] * u[A + 1] for A in range(len(ut)))
    return np.array(zt, dtype=kind), np.array([u0] + ut, dtype=kind)


def _holo_jacobian(f, w) -> np.ndarray:
    """Complex Jacobian of a holomorphic map by dual numbers with complex values."""
    w = np.asarray(w, dtype=complex)
    cols = []
    for k in range(w.size):
        e = np.array([Dual(w[j], 1.0 if j == k else 0.0) for j in range(w.size)], dtype=object)
        y = f(e)
        cols.append([v.eps if isinstance(v, Dual) else 0.0 for v in y])
    return np.asarray(cols, dtype=complex).T


def tau(F: Prepotential, X) -> np.ndarray:
    """tau_AB = F_AB(X) - 2i (N Xbar)_A (N Xbar)_B / (Xbar N Xbar)."""
    X = np.asarray(X, dtype=complex)
    fab = np.asarray(F.FAB(X), dtype=complex)
    N = fab.imag
    v = N @ np.conj(X)
    return fab - 2j * np.outer(v, v) / (np.conj(X) @ N @ np.conj(X))


def _tau_from(fab: np.ndarray, X: np.ndarray) -> np.ndarray:
    N = fab.imag
    v = N @ np.conj(X)
    return fab - 2j * np.outer(v, v) / (np.conj(X) @ N @ np.conj(X))


def imtau_inverse(F: Prepotential, X) -> np.ndarray:
    """(Im tau)^{-1} = N^{-1} - (Xbar X^T + X Xbar^T) / (Xbar N X)."""
    X = np.asarray(X, dtype=complex)
    N = F.N(X)
    M = np.outer(np.conj(X), X)
    return np.linalg.inv(N) - np.real(M + M.T) / np.real(np.conj(X) @ N @ X)


def dualization(F: Prepotential, x, psi, detail: bool = True):
    """Double-dual sign rule, Omega_+ invariance, L anti-self-duality, U self-duality and the tau law."""
    x = np.asarray(x, dtype=float)
    psi = np.asarray(psi, dtype=float)
    m = x.shape[0]
    n = m - 1
    z, u = holomorphic_coords(F, x, psi)
    zt, ut = dual_map(z, u)
    zz, uu = dual_map(zt, ut)
    sign = np.concatenate([[1.0], -np.ones(n)])
    res = {"double_dual": max(sup(zz - sign * z), sup(uu - sign * u))}
    # Omega_+ = du_I ^ dz^I in coordinates w = (z, u)
    w = np.concatenate([z, u])
    Om = np.zeros((2 * m, 2 * m), dtype=complex)
    Om[m:, :m] = np.eye(m)
    Om[:m, m:] = -np.eye(m)
    J = _holo_jacobian(lambda v: np.concatenate(dual_map(v[:m], v[m:])), w)
    res["omega_plus"] = sup(J.T @ Om @ J - Om)
    c, _ = chi(x)
    fa = np.asarray(F.FA(c), dtype=complex)
    fab = np.asarray(F.FAB(c), dtype=complex)
    r0 = np.linalg.norm(x[0])
    L = 2.0 * r0 * np.imag(complex(F.F(c)))
    Ltil = 2.0 * r0 * np.imag(complex(F.F(c)) - c @ fa)
    res["L_antiself"] = abs(Ltil + L)
    if F.family == "quadratic":
        Fd = F.dual()
        res["L_antiself_explicit"] = abs(2.0 * r0 * np.imag(complex(Fd.F(fa))) + L)
    zc, _, zb = _parts(x)
    U = -4.0 * zc[0] * zb[0] / r0 * np.imag(np.conj(c) @ fa)
    Ud = -4.0 * zc[0] * zb[0] / r0 * np.imag(np.conj(fa) @ (-c))
    res["U_selfdual"] = abs(np.real(U - Ud))
    # tau modular law at X = chi (degree-0 quantities)
    t = _tau_from(fab, c)
    td = _tau_from(-np.linalg.inv(fab), fa)
    res["tau_modular"] = sup(td + np.linalg.inv(t))
    worst = max(res.values())
    return (worst, res) if detail else worst


# ---------------------------------------------------------------- reduction and Ferrara-Sabharwal metric


def _free_map(m: int) -> dict[tuple[int, int], int]:
    return {s: f for f, s in enumerate(imhp.free_slots(m))}


def _X(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    return 0.5 * (rho[1:, 1] + 1j * rho[1:, 2])


def reduce_cmap(F: Prepotential, s: float = 1.0, scheme: DerivScheme = CMAP_SCHEME) -> ReducedData:
    """Closed-form reduced Higgs field and basic reduced connection on the canonical chart."""
    m = F.n + 1
    n = F.n
    fmap = _free_map(m)
    nf = 3 * n - 1

    def parts(rho):
        rho = np.asarray(rho, dtype=float)
        X = _X(rho)
        fab = np.asarray(F.FAB(X), dtype=complex)
        n0 = np.linalg.norm(rho[0])
        pt = rho[1:] @ rho[0] / n0**2
        return rho, X, fab, n0, pt

    def higgs(rho):
        rho, X, fab, n0, pt = parts(rho)
        N = fab.imag
        R = -2.0 * np.real(np.conj(X) @ N @ X)
        if R == 0:
            raise CmapDomainError("R vanishes")
        out = np.zeros((m, m))
        out[0, 0] = R + pt @ N @ pt
        out[0, 1:] = -pt @ N
        out[1:, 0] = -N @ pt
        out[1:, 1:] = N
        return -out / n0

    def drho(I, i):
        v = np.zeros(nf)
        if (I, i) in fmap:
            v[fmap[(I, i)]] = 1.0
        return v

    def conn(rho):
        rho, X, fab, n0, pt = parts(rho)
        N = fab.imag
        A = np.zeros((m, nf))
        dpt = np.array([drho(B + 1, 0) for B in range(n)])  # exact on the canonical chart
        for a in range(n):
            A[a + 1] = fab[a].real @ dpt
        eps = np.zeros((3, 3, 3))
        eps[0, 1, 2] = eps[1, 2, 0] = eps[2, 0, 1] = 1.0
        eps[0, 2, 1] = eps[2, 1, 0] = eps[1, 0, 2] = -1.0
        t = np.zeros(nf)
        for a in range(n):
            for b in range(n):
                for i in range(3):
                    for j in range(3):
                        for k in range(3):
                            if eps[i, j, k] != 0:
                                t += 0.5 * N[a, b] * eps[i, j, k] * rho[0, i] * rho[a + 1, j] * drho(b + 1, k)
        A[0] = t / n0**3 - pt @ A[1:]
        return A

    return ReducedData(n, higgs, conn, s, scheme, name=f"cmap-{F.family}")


@dataclass
class FSData:
    """Ferrara-Sabharwal data on the qk chart of a c-map prepotential."""

    F: Prepotential
    s: float = 1.0

    @property
    def n(self) -> int:
        return self.F.n

    @property
    def dim(self) -> int:
        return 4 * self.F.n

    def _forms(self, p):
        """Basic 1-forms on the chart: dpt (n, dim), dX (n, dim) complex, dpsi (m, dim)."""
        n, dim = self.n, self.dim
        m = n + 1
        fmap = _free_map(m)
        nf = 3 * n - 1
        e = np.eye(dim)
        dpt = np.array([e[fmap[(A + 1, 0)]] for A in range(n)])
        dX = np.zeros((n, dim), dtype=complex)
        for A in range(n):
            dX[A] = 0.5 * e[fmap[(A + 1, 1)]]
            if (A + 1, 2) in fmap:
                dX[A] += 0.5j * e[fmap[(A + 1, 2)]]
        dpsi = e[nf:]
        return dpt, dX, dpsi

    def coords(self, p):
        p = np.asarray(p, dtype=float)
        m = self.n + 1
        rho = imhp.from_free(p[: 3 * self.n - 1], m)
        return rho[1:, 0].copy(), _X(rho), p[3 * self.n - 1 :]

    def R(self, p) -> float:
        _, X, _ = self.coords(p)
        return float(-2.0 * np.real(np.conj(X) @ self.F.N(X) @ X))

    def pieces(self, p) -> dict:
        pt, X, psi = self.coords(p)
        F = self.F
        fa = np.asarray(F.FA(X), dtype=complex)
        fab = np.asarray(F.FAB(X), dtype=complex)
        N = fab.imag
        XNX = float(np.real(np.conj(X) @ N @ X))
        R = -2.0 * XNX
        if abs(R) < 1e-14:
            raise CmapDomainError("R vanishes")
        dpt, dX, dpsi = self._forms(p)
        dXb = np.conj(dX)
        dR = -2.0 * np.imag(dXb.T @ fa + np.conj(X) @ fab @ dX)
        alpha = dpsi[0] + pt @ dpsi[1:]
        t = tau(F, X)
        it = np.imag(t)
        return dict(pt=pt, X=X, psi=psi, fa=fa, fab=fab, N=N, XNX=XNX, R=R, dpt=dpt, dX=dX, dR=dR, alpha=alpha, tau=t, imtau=it, dpsi=dpsi)

    @staticmethod
    def _sym(a, b) -> np.ndarray:
        t = np.multiply.outer(a, b)
        return t + t.T

    def g_psk(self, P) -> np.ndarray:
        X, N, dX = P["X"], P["N"], P["dX"]
        dXb = np.conj(dX)
        XNX = P["XNX"]
        a = np.einsum("Am,AB,Bn->mn", dXb, N, dX)
        t1 = a + a.T
        v = np.conj(X) @ N @ dX  # (Xbar N dX)
        t2 = self._sym(np.conj(v), v)
        return np.real(XNX * t1 - t2) / XNX**2

    def g_t(self, P) -> np.ndarray:
        t = P["tau"]
        M = np.linalg.inv(P["imtau"])
        a = P["dpsi"][1:] + t @ P["dpt"]
        ab = P["dpsi"][1:] + np.conj(t) @ P["dpt"]
        g = np.zeros((self.dim, self.dim), dtype=complex)
        for A in range(self.n):
            for B in range(self.n):
                g += 0.5 * M[A, B] * self._sym(a[A], ab[B])
        return np.real(g)

    def s_g(self, p) -> np.ndarray:
        """2 s g = g_PSK - (dR/2R)^2 - g_T / R - alpha^2 / R^2."""
        P = self.pieces(p)
        R = P["R"]
        q = P["dR"] / (2.0 * R)
        two_sg = self.g_psk(P) - self._sym(q, q) - self.g_t(P) / R - self._sym(P["alpha"], P["alpha"]) / R**2
        return 0.5 * two_sg

    def metric(self) -> MetricField:
        return MetricField(self.dim, self.s_g)

    def theta(self, p) -> np.ndarray:
        """(theta_1, theta_2, theta_3) from the closed-form expressions; shape (3, dim)."""
        P = self.pieces(p)
        X, fa, fab, R = P["X"], P["fa"], P["fab"], P["R"]
        dX = P["dX"]
        dF = fab @ dX
        th1 = -(P["alpha"] + np.real(np.conj(X) @ dF - fa @ np.conj(dX))) / (2.0 * R)
        w = -(X @ P["dpsi"][1:] + fa @ P["dpt"]) / (2.0 * R)
        return np.array([th1, 2.0 * w.real, 2.0 * w.imag])

    def kahler_potential(self, p) -> float:
        _, X, _ = self.coords(p)
        Z = X / X[0]
        return float(np.log(np.real(np.conj(Z) @ self.F.N(Z) @ Z)))


def fs_assemble(F: Prepotential, s: float = 1.0) -> FSData:
    return FSData(F, s)


def fs_checks(F: Prepotential, p, detail: bool = True):
    """Closed-form FS metric and theta against the qk pipeline, plus the FS side identities."""
    fs = fs_assemble(F)
    rd = reduce_cmap(F)
    st = qk_structure(rd)
    P = fs.pieces(p)
    res = {}
    res["metric_vs_pipeline"] = sup(fs.s_g(p) - st.s_g(p))
    res["theta_vs_pipeline"] = sup(fs.theta(p) - theta(rd)[1](p))
    X, N, dX = P["X"], P["N"], P["dX"]
    res["dR_identity"] = sup(P["dR"] / (2.0 * P["R"]) - np.real(np.conj(X) @ N @ dX) / P["XNX"])
    res["theta0_dR"] = sup(theta(rd)[0](p) - P["dR"] / (2.0 * P["R"]))
    res["R_forms"] = abs(P["R"] + 2.0 * np.imag(np.conj(X) @ P["fa"]))
    res["imtau_inverse"] = sup(imtau_inverse(F, X) - np.linalg.inv(P["imtau"]))
    res["tau_symmetric"] = sup(P["tau"] - P["tau"].T)
    worst = max(res.values())
    return (worst, res) if detail else worst


def downstairs_generators(F: Prepotential) -> dict[str, VectorField]:
    """Q^A, P_A, I, W on the qk chart (psi_0' fiber coordinate)."""
    n = F.n
    m = n + 1
    dim = 4 * n
    nf = 3 * n - 1
    fmap = _free_map(m)

    def Q(A):
        return VectorField(dim, lambda p: np.eye(dim)[nf + A])

    def P(A):
        def fn(p):
            v = np.zeros(dim)
            v[fmap[(A, 0)]] = 1.0
            v[nf] = -p[nf + A]
            return v

        return VectorField(dim, fn)

    def W(p):
        p = np.asarray(p, dtype=float)
        v = -p.copy()
        v[nf] *= 2.0
        return v

    out = {f"Q{A}": Q(A) for A in range(1, m)}
    out.update({f"P{A}": P(A) for A in range(1, m)})
    out["I"] = VectorField(dim, lambda p: np.eye(dim)[nf])
    out["W"] = VectorField(dim, W)
    return out


def heisenberg_downstairs(F: Prepotential, p, metric: MetricField | None = None, detail: bool = True):
    """Brackets of the downstairs generators and their Killing residuals relative to max(1, sup|g|)."""
    gens = downstairs_generators(F)
    n = F.n
    g = metric or fs_assemble(F).metric()
    sch = CMAP_SCHEME
    br = lambda X, Y: bracket(X, Y, sch)(p)
    alg = 0.0
    Iv = gens["I"](p)
    for a in range(1, n + 1):
        for b in range(1, n + 1):
            alg = max(alg, sup(br(gens[f"P{a}"], gens[f"Q{b}"]) - (a == b) * Iv))
            alg = max(alg, sup(br(gens[f"P{a}"], gens[f"P{b}"])), sup(br(gens[f"Q{a}"], gens[f"Q{b}"])))
        alg = max(alg, sup(br(gens["W"], gens[f"P{a}"]) - gens[f"P{a}"](p)))
        alg = max(alg, sup(br(gens["W"], gens[f"Q{a}"]) - gens[f"Q{a}"](p)))
    alg = max(alg, sup(br(gens["W"], gens["I"]) - 2.0 * Iv))
    scale = max(1.0, sup(g(p)))
    kill = {k: sup(lie_metric(V, g, sch)(p)) / scale for k, V in gens.items()}
    res = {"algebra": alg, "killing": max(kill.values())}
    worst = max(res.values())
    return (worst, {**res, "killing_per_field": kill}) if detail else worst


def signature_check(F: Prepotential, points, detail: bool = True):
    """Definiteness of s g at points of the (Zbar N Z) > 0 domain."""
    fs = fs_assemble(F)
    signs = []
    for p in points:
        ev = np.linalg.eigvalsh(fs.s_g(p))
        if np.all(ev < 0):
            signs.append(-1)
        elif np.all(ev > 0):
            signs.append(+1)
        else:
            signs.append(0)
    ok = all(sgn == signs[0] and sgn != 0 for sgn in signs) if signs else False
    rep = {
        "definite": ok,
        "sign": signs[0] if ok else 0,
        "violations": sum(1 for v in signs if v == 0),
        "note": "s g negative definite: -g positive with s of the opposite sign" if ok and signs[0] < 0 else "",
    }
    return (ok, rep) if detail else ok


def end_to_end_residual(F: Prepotential, points, method: str = "closed", detail: bool = False):
    """L -> Legendre GH data -> reduction -> Ansatz metric against the closed-form FS metric."""
    from .qk import reduce_gh

    # the contour Hessian comes from wide differences, so the equivariance guard is loosened to match
    rd = reduce_gh(legendre_cmap_gh(F, method), tol=1e-8 if method == "closed" else 1e-6)
    st = qk_structure(rd)
    fs = fs_assemble(F)
    res = [sup(st.s_g(p) - fs.s_g(p)) / max(1.0, sup(fs.s_g(p))) for p in points]
    worst = max(res)
    return (worst, {"per_point": res, "method": method}) if detail else worst


# ---------------------------------------------------------------- sampling


def _in_domain(F: Prepotential, X, require_negative_R: bool) -> bool:
    N = F.N(X)
    XNX = float(np.real(np.conj(X) @ N @ X))
    if abs(XNX) < 1e-3 or abs(np.linalg.det(N)) < 1e-6:
        return False
    try:
        it = np.imag(tau(F, X))
        if abs(np.linalg.det(it)) < 1e-8:
            return False
    except (ZeroDivisionError, np.linalg.LinAlgError, FloatingPointError):
        return False
    if require_negative_R:
        ev = np.linalg.eigvalsh(N)
        if XNX <= 0 or np.sum(ev > 0) != 1:
            return False
    return True


def random_base_point(
    F: Prepotential, rng: np.random.Generator, require_negative_R: bool = False, max_tries: int = 1000
) -> np.ndarray:
    """Point of the qk chart with X^1 in [0.3, 1.5], other X^A in a complex box of half-width 0.6."""
    n = F.n
    m = n + 1
    for _ in range(max_tries):
        rho = np.zeros((m, 3))
        rho[0, 0] = 1.0
        rho[1:, 0] = rng.uniform(-1.0, 1.0, n)
        rho[1, 1] = 2.0 * rng.uniform(0.3, 1.5)
        if n > 1:
            rho[2:, 1:] = 2.0 * rng.uniform(-0.6, 0.6, (n - 1, 2))
        X = _X(rho)
        if F.family == "monomial" and np.min(np.abs(X)) < 0.1:
            continue
        if not _in_domain(F, X, require_negative_R):
            continue
        psi = rng.uniform(-1.0, 1.0, m)
        return np.concatenate([imhp.to_free(rho), psi])
    raise CmapDomainError("no admissible sample found; the prepotential may be degenerate")


def random_cone_point(F: Prepotential, rng: np.random.Generator, require_negative_R: bool = False):
    """(upstairs chart point, base point, q) with x = qbar rho q and generic z^0."""
    n = F.n
    m = n + 1
    pb = random_base_point(F, rng, require_negative_R)
    rho = imhp.from_free(pb[: 3 * n - 1], m)
    while True:
        q = rng.normal(size=4)
        q *= rng.uniform(0.7, 1.3) / np.linalg.norm(q)
        x = imhp.embed(rho, q)
        if abs(x[0, 1]) + abs(x[0, 2]) > 0.05 * np.linalg.norm(x[0]):
            break
    return np.concatenate([x.ravel(), pb[3 * n - 1 :]]), pb, q
