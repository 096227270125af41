"""Four-dimensional quaternionic Kaehler metrics from a single potential.

For n = 1 on the canonical chart rho^0 = i, rho^1 = rho1 i + rho2 j (rho2 > 0)
the reduced data are determined by one function U(rho1, rho2) subject to

    rho2 (U_11 + U_22) = U_2,

where the subscripts denote partial derivatives.  The reduced connection
vanishes identically.  The chart on M is (rho1, rho2, psi_0, psi_1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import dual, imhp
from .excalc import CENTRAL, DerivScheme, KForm, MetricField
from .qk import MULT, ReducedData, _CONJ

__all__ = [
    "CPPotential",
    "CPMetric",
    "DegenerateCurvatureError",
    "constraint_residual",
    "eigenfunction_residual",
    "covariant_gradient",
    "higgs_4d",
    "higgs_from_hessian",
    "reduced_data",
    "epsilon",
    "lambda_forms",
    "v_fields",
    "xi_form",
    "theta_4d",
    "cp_metric",
    "builtin_potential",
    "rho1_potential",
    "rho2sq_potential",
    "one_potential",
    "linear_combo_potential",
    "random_point",
    "SAMPLE_BOX",
]

SAMPLE_BOX = ((-2.0, 2.0), (0.2, 3.0))

# outer differences of analytic first derivatives: smooth, so a wide 5-point stencil is accurate
_HESS_SCHEME = DerivScheme(CENTRAL, 1e-3, 4)


class DegenerateCurvatureError(ValueError):
    """eps(v1, v2) vanishes, so the scalar-curvature sign is undetermined."""


@dataclass
class CPPotential:
    """U(rho1, rho2) given by a ring-operation evaluator, differentiated with dual numbers."""

    fn: Callable[[object, object], object]
    name: str = "custom"

    def _check(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if r.shape != (2,):
            raise ValueError("expected (rho1, rho2)")
        if not r[1] > 0:
            raise imhp.ChartDomainError(f"rho2 must be positive, got {r[1]}")
        return r

    def __call__(self, r) -> float:
        r = self._check(r)
        return float(self.fn(r[0], r[1]))

    def gradient(self, r) -> np.ndarray:
        r = self._check(r)
        return np.asarray(dual.gradient(lambda y: self.fn(y[0], y[1]), r), dtype=float)

    def hessian(self, r) -> np.ndarray:
        r = self._check(r)
        return np.asarray(dual.hessian(lambda y: self.fn(y[0], y[1]), r), dtype=float)

    def __add__(self, other: "CPPotential") -> "CPPotential":
        return CPPotential(lambda a, b: self.fn(a, b) + other.fn(a, b), f"{self.name}+{other.name}")

    def scale(self, c: float) -> "CPPotential":
        return CPPotential(lambda a, b: c * self.fn(a, b), f"{c}*{self.name}")


def _rho_config(r) -> np.ndarray:
    return np.array([[1.0, 0.0, 0.0], [r[0], r[1], 0.0]])


def _r_of(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=float).reshape(2, 3)
    return rho[1, :2].copy()


def constraint_residual(u: CPPotential, r) -> float:
    """|rho2 (U_11 + U_22) - U_2|."""
    H = u.hessian(r)
    g = u.gradient(r)
    return abs(r[1] * (H[0, 0] + H[1, 1]) - g[1])


def eigenfunction_residual(u: CPPotential, r) -> float:
    """|Delta_H2 f - 3/4 f| with f = U / sqrt(rho2) and Delta_H2 = rho2^2 (d1^2 + d2^2)."""
    f = CPPotential(lambda a, b: u.fn(a, b) / np.sqrt(b), "f")
    H = f.hessian(r)
    return abs(r[1] ** 2 * (H[0, 0] + H[1, 1]) - 0.75 * f(r))


def covariant_gradient(u: CPPotential, r) -> np.ndarray:
    """nabla_{Ii} U, shape (2, 3); the i = 3 components vanish on this chart."""
    r = np.asarray(r, dtype=float)
    U = u(r)
    U1, U2 = u.gradient(r)
    r1, r2 = r
    out = np.zeros((2, 3))
    out[0, 0] = U - r1 * U1 - r2 * U2
    out[1, 0] = U1
    out[0, 1] = r2 * U1 - r1 * U2
    out[1, 1] = U2
    return out


def higgs_4d(u: CPPotential, r) -> np.ndarray:
    """Solve U_IJ rho^I_i rho^J_j = 1/2 [[U - rho2 U_2, rho2 U_1], [rho2 U_1, rho2 U_2]]."""
    r = np.asarray(r, dtype=float)
    if not r[1] > 0:
        raise np.linalg.LinAlgError(f"singular system at rho2 = {r[1]}")
    U = u(r)
    U1, U2 = u.gradient(r)
    r1, r2 = r
    M = 0.5 * np.array([[U - r2 * U2, r2 * U1], [r2 * U1, r2 * U2]])
    R = np.array([[1.0, 0.0], [r1, r2]])  # R[I, i] = rho^I_i
    Ri = np.linalg.solve(R, np.eye(2))
    H = Ri.T @ M @ Ri
    return 0.5 * (H + H.T)


def higgs_from_hessian(u: CPPotential, r) -> np.ndarray:
    """U_IJ = 1/4 nabla_I . nabla_J U from covariant derivatives on the canonical chart."""
    sec = imhp.Section(2, 0, lambda rho: covariant_gradient(u, _r_of(rho)), (1,), _HESS_SCHEME)
    N = imhp.cov_deriv(sec, _rho_config(r))  # (I, i, J, j)
    return 0.25 * np.einsum("IiJi->IJ", N)


def reduced_data(u: CPPotential, s: float = 1.0) -> ReducedData:
    """ReducedData for qk with the Higgs field from higgs_4d and vanishing connection."""
    return ReducedData(
        1,
        lambda rho: higgs_4d(u, _r_of(rho)),
        lambda rho: np.zeros((2, 2)),
        s,
        DerivScheme(),
        name=f"cp4d({u.name})",
    )


def epsilon(u: CPPotential, r) -> float:
    """eps(v1, v2) = U U_2 - rho2 (U_1^2 + U_2^2)."""
    U = u(r)
    U1, U2 = u.gradient(r)
    return float(U * U2 - r[1] * (U1**2 + U2**2))


def lambda_forms(p) -> np.ndarray:
    """lambda_i = 2 rho^I_i dpsi_I as rows of shape (3, 4)."""
    r1, r2 = p[0], p[1]
    lam = np.zeros((3, 4))
    lam[0, 2], lam[0, 3] = 2.0, 2.0 * r1
    lam[1, 3] = 2.0 * r2
    return lam


def v_fields(u: CPPotential, r) -> np.ndarray:
    """v_i = nabla_{Ii} U d/dpsi_I as rows (i, I)."""
    return covariant_gradient(u, r).T


def xi_form(u: CPPotential, p) -> np.ndarray:
    """The quaternion-valued 1-form xi, shape (4, 4)."""
    r = np.asarray(p[:2], dtype=float)
    v = v_fields(u, r)
    eps = v[0, 0] * v[1, 1] - v[0, 1] * v[1, 0]
    if eps == 0:
        raise DegenerateCurvatureError("eps(v1, v2) vanishes")

    def iota(w):
        # i_w (dpsi_0 ^ dpsi_1) = w^0 dpsi_1 - w^1 dpsi_0
        out = np.zeros(4)
        out[2], out[3] = -w[1], w[0]
        return out

    xi = np.zeros((4, 4))
    xi[0] = iota(v[0]) / eps
    xi[1, 0] = 1.0 / (2.0 * r[1])
    xi[2, 1] = 1.0 / (2.0 * r[1])
    xi[3] = iota(v[1]) / eps
    return xi


def theta_4d(u: CPPotential, p) -> np.ndarray:
    """theta_vec = -1/(2U) [lambda_1 i + lambda_2 j + (U_1 drho2 - U_2 drho1) k], shape (3, 4)."""
    r = np.asarray(p[:2], dtype=float)
    U = u(r)
    U1, U2 = u.gradient(r)
    lam = lambda_forms(p)
    lam[2, 0], lam[2, 1] = -U2, U1
    return -lam / (2.0 * U)


@dataclass
class CPMetric:
    """s omega (imaginary quaternion 2-form, shape (3, 4, 4)) and s g on (rho1, rho2, psi0, psi1)."""

    u: CPPotential
    s_omega: KForm
    s_g: MetricField
    sign_flag: Callable[[np.ndarray], int] = field(repr=False)


def _assemble(u: CPPotential, p):
    p = np.asarray(p, dtype=float)
    r = p[:2]
    U = u(r)
    if U == 0:
        raise imhp.ChartDomainError("potential vanishes")
    eps = epsilon(u, r)
    if abs(eps) < 1e-14 * max(1.0, U * U):
        raise DegenerateCurvatureError(f"eps(v1, v2) = {eps:.3e}")
    xi = xi_form(u, p)
    c = r[1] * eps / U**2
    T = np.einsum("abc,am,bn->cmn", MULT, _CONJ[:, None] * xi, xi)
    om = c * (T - np.swapaxes(T, 1, 2))
    g = c * (T + np.swapaxes(T, 1, 2))[0]
    return om[1:], 0.5 * (g + g.T), eps


def cp_metric(u: CPPotential) -> CPMetric:
    """s omega = rho2 eps / U^2 xibar ^ xi and s g = rho2 eps / U^2 |xi|^2."""
    return CPMetric(
        u,
        KForm(2, 4, lambda p: _assemble(u, p)[0], (3,)),
        MetricField(4, lambda p: _assemble(u, p)[1]),
        lambda p: int(np.sign(epsilon(u, np.asarray(p[:2], dtype=float)))),
    )


# ---------------------------------------------------------------- built-ins


def rho1_potential() -> CPPotential:
    return CPPotential(lambda a, b: a, "rho1")


def rho2sq_potential() -> CPPotential:
    return CPPotential(lambda a, b: b * b, "rho2sq")


def one_potential() -> CPPotential:
    return CPPotential(lambda a, b: 1.0 + 0.0 * a, "one")


def linear_combo_potential(a: float = 2.0, b: float = 3.0) -> CPPotential:
    return CPPotential(lambda x, y: a * x + b * y * y, f"linear-combo({a},{b})")


def builtin_potential(name: str, params=None) -> CPPotential:
    table = {"rho1": rho1_potential, "rho2sq": rho2sq_potential, "one": one_potential}
    if name in table:
        return table[name]()
    if name == "linear-combo":
        a, b = (2.0, 3.0) if params is None else params
        return linear_combo_potential(float(a), float(b))
    raise KeyError(f"unknown potential {name!r}")


def random_point(
    rng: np.random.Generator,
    box=SAMPLE_BOX,
    psi_scale: float = 1.0,
    u: CPPotential | None = None,
    min_distance: float = 0.05,
    max_tries: int = 1000,
) -> np.ndarray:
    """(rho1, rho2, psi0, psi1) in the sample box.

    With ``u`` given, points closer than ``min_distance`` to the singular
    locus U = 0 (estimated as |U| / |grad U|) are rejected.
    """
    (a0, a1), (b0, b1) = box
    for _ in range(max_tries):
        r = np.array([rng.uniform(a0, a1), rng.uniform(b0, b1)])
        psi = rng.uniform(-psi_scale, psi_scale, 2)
        if u is not None:
            val, grad = u(r), np.linalg.norm(u.gradient(r))
            if val == 0.0 or (grad > 0 and abs(val) / grad < min_distance):
                continue
        return np.concatenate([r, psi])
    raise RuntimeError("no sample found away from U = 0")
