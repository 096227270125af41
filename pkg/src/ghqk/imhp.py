"""Inhomogeneous charts and induced covariant calculus on Im HP^n.

Only the canonical chart is implemented: rho^0 = i, rho^1 = rho^1_1 i + rho^1_2 j
with rho^1_2 > 0, rho^I general for I >= 2.  Configurations are stored as
(m, 3) arrays with m = n + 1; the free coordinates are the entries (1, 0),
(1, 1) and all entries of rows I >= 2.

Homogeneous coordinates are recovered as x^I = qbar rho^I q, so that
x_i = |q|^2 R_ij(q^-1) rho_j with R the adjoint matrix of module quatmath.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial.transform import Rotation

from .excalc import DEFAULT_SCHEME, DerivScheme, partials, sup
from .quatmath import EPS3, adjoint_arr, qinv, qmul, qnorm2, sandwich_arr, z2_representative

__all__ = [
    "ChartDomainError",
    "RestrictedChart",
    "ConnCoeffs",
    "Section",
    "free_slots",
    "frozen_slots",
    "to_free",
    "from_free",
    "project",
    "embed",
    "conn_coeffs",
    "analytic_coeffs",
    "cov_deriv",
    "lift",
    "lift_residual",
    "section_constraints_residual",
    "completeness_check",
    "flatness_residual",
    "rho_section",
]


class ChartDomainError(ValueError):
    """Point outside the canonical inhomogeneous chart."""


_UNITS = np.eye(4)


def free_slots(m: int) -> list[tuple[int, int]]:
    return [(1, 0), (1, 1)] + [(I, i) for I in range(2, m) for i in range(3)]


def frozen_slots(m: int) -> list[tuple[int, int]]:
    return [(0, 0), (0, 1), (0, 2), (1, 2)]


@dataclass(frozen=True)
class RestrictedChart:
    """The canonical chart of Im HP^n, dimension 3n - 1."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")

    @property
    def m(self) -> int:
        return self.n + 1

    @property
    def dim(self) -> int:
        return 3 * self.n - 1

    def validate(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=float).reshape(self.m, 3)
        if not rho[1, 1] > 0:
            raise ChartDomainError("rho^1_2 must be positive")
        if not (np.allclose(rho[0], [1, 0, 0]) and rho[1, 2] == 0):
            raise ChartDomainError("configuration is not restricted")
        return rho

    def random_point(self, rng: np.random.Generator) -> np.ndarray:
        f = rng.normal(size=self.dim)
        f[1] = abs(f[1]) + 0.2
        return from_free(f, self.m)


def to_free(rho) -> np.ndarray:
    rho = np.asarray(rho)
    m = rho.shape[0]
    return np.array([rho[I, i] for I, i in free_slots(m)], dtype=rho.dtype)


def from_free(f, m: int) -> np.ndarray:
    f = np.asarray(f)
    rho = np.zeros((m, 3), dtype=f.dtype if f.dtype == object else float)
    rho[0, 0] = 1.0
    for k, (I, i) in enumerate(free_slots(m)):
        rho[I, i] = f[k]
    return rho


def embed(rho, q) -> np.ndarray:
    """x^I = qbar rho^I q."""
    rho = np.asarray(rho, dtype=float)
    q = np.asarray(q, dtype=float)
    return sandwich_arr(q, rho)


def project(x, rel: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of ``embed`` on the chart domain; q is returned as its Z2 representative."""
    x = np.asarray(x, dtype=float)
    x0, x1 = x[0], x[1]
    r0 = np.linalg.norm(x0)
    c01 = np.cross(x0, x1)
    nc = np.linalg.norm(c01)
    if r0 == 0 or nc <= rel * r0 * max(np.linalg.norm(x1), 1e-300):
        raise ChartDomainError("x^0 and x^1 must be nonzero and non-collinear")
    cI = np.cross(x0, x)
    rho = np.stack(
        [
            x @ x0 / r0**2,
            cI @ c01 / (nc * r0**2),
            np.cross(c01, cI) @ x0 / (nc * r0**3),
        ],
        axis=-1,
    )
    e1 = x0 / r0
    e3 = c01 / nc
    frame = np.stack([e1, np.cross(e3, e1), e3], axis=-1)  # columns are images of i, j, k
    # qbar v q = |q|^2 frame v; scipy's active rotation u v u^-1 gives u = qbar
    xyzw = Rotation.from_matrix(frame).as_quat()
    u = np.array([xyzw[3], -xyzw[0], -xyzw[1], -xyzw[2]])
    q = z2_representative(np.sqrt(r0) * u)
    return rho, q


def _ell(rho) -> np.ndarray:
    """L[a, j, I] = <u_a u_j, rho^I>."""
    rho = np.asarray(rho)
    m = rho.shape[0]
    prods = np.stack([[qmul(_UNITS[a], _UNITS[j + 1]) for j in range(3)] for a in range(4)])
    rq = np.concatenate([np.zeros((m, 1), dtype=rho.dtype), rho], axis=1)
    return np.einsum("ajc,Ic->ajI", prods, rq)


@dataclass(frozen=True)
class ConnCoeffs:
    """Connection coefficients A[I, i, a] and operator table D[I, i, f] at one point.

    D[I, i, f] is the coefficient of d/d(free coordinate f) in D_{Ii}.
    """

    rho: np.ndarray = field(repr=False)
    A: np.ndarray
    D: np.ndarray
    L: np.ndarray = field(repr=False)

    def quaternion(self, I: int, i: int) -> np.ndarray:
        return self.A[I, i]


@functools.lru_cache(maxsize=4096)
def _coeffs_cached(key: tuple[float, ...], m: int) -> ConnCoeffs:
    rho = np.array(key).reshape(m, 3)
    L = _ell(rho)
    fr = frozen_slots(m)
    M = np.array([[L[a, i, I] for (I, i) in fr] for a in range(4)])
    sol = np.linalg.solve(M, np.eye(4))  # sol[s, b]
    A = np.zeros((m, 3, 4))
    for s, (I, i) in enumerate(fr):
        A[I, i] = sol[s]
    fs = free_slots(m)
    D = np.zeros((m, 3, len(fs)))
    for f, (J, j) in enumerate(fs):
        D[J, j, f] = 1.0
        D[:, :, f] -= np.einsum("Iia,a->Ii", A, L[:, j, J])
    for arr in (A, D, L):
        arr.setflags(write=False)
    return ConnCoeffs(rho, A, D, L)


def conn_coeffs(rho) -> ConnCoeffs:
    """Solve the defining linear conditions for the coefficients at rho."""
    rho = np.asarray(rho, dtype=float)
    if not rho[1, 1] > 0:
        raise ChartDomainError("rho^1_2 must be positive")
    return _coeffs_cached(tuple(rho.ravel().tolist()), rho.shape[0])


def analytic_coeffs(rho) -> np.ndarray:
    """Closed-form table: A_01 = 1, A_02 = -k, A_03 = (r1/r2) i + j, A_13 = -(1/r2) i."""
    rho = np.asarray(rho, dtype=float)
    r1, r2 = rho[1, 0], rho[1, 1]
    A = np.zeros((rho.shape[0], 3, 4))
    A[0, 0] = [1, 0, 0, 0]
    A[0, 1] = [0, 0, 0, -1]
    A[0, 2] = [0, r1 / r2, 1, 0]
    A[1, 2] = [0, -1 / r2, 0, 0]
    return A


@dataclass
class Section:
    """Local section of a weighted bundle over the canonical chart.

    ``fn`` maps a restricted configuration (m, 3) to an array; the axes listed
    in ``vec_axes`` carry the SO(3) vector representation, the rest are inert
    (R^{n+1} or other trivial indices).  ``weight`` is the scaling weight w.
    """

    m: int
    weight: int
    fn: Callable[[np.ndarray], np.ndarray]
    vec_axes: tuple[int, ...] = ()
    scheme: DerivScheme = DEFAULT_SCHEME

    def __call__(self, rho) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(rho, dtype=float).reshape(self.m, 3)))


def rho_section(m: int) -> Section:
    """The coordinates rho^J_j as a section of weight 1 with one vector index."""
    return Section(m, 1, lambda r: r, (1,))


def _rotate_axis(t: np.ndarray, axis: int, Ak: np.ndarray) -> np.ndarray:
    """sum_{k,l} -eps_{jkl} A_k t_{..l..} on the given axis (j replaces l)."""
    gen = -np.einsum("jkl,k->jl", EPS3, Ak)
    return np.moveaxis(np.tensordot(gen, t, axes=(1, axis)), 0, axis)


def _nabla(sec: Section, rho, coeffs: ConnCoeffs | None = None) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    m = sec.m
    cc = conn_coeffs(rho) if coeffs is None else coeffs
    f0 = to_free(rho)
    val = sec(rho)
    grad = partials(lambda f: sec.fn(from_free(f, m)), f0, sec.scheme)  # (nf, ...)
    out = np.tensordot(cc.D, grad, axes=(2, 0))  # (m, 3, ...)
    out = out + sec.weight * np.multiply.outer(cc.A[..., 0], val)
    for ax in sec.vec_axes:
        for I in range(m):
            for i in range(3):
                out[I, i] += _rotate_axis(val, ax, cc.A[I, i, 1:])
    return out


def cov_deriv(sec: Section, rho=None, coeffs: ConnCoeffs | None = None):
    """Induced covariant derivative.

    With ``rho`` given, return the array nabla_{Ii} F with leading axes (I, i).
    Without it, return the derivative as a new Section of weight w - 1 whose
    value axes are (I, i, old axes...).
    """
    if rho is not None:
        return _nabla(sec, rho, coeffs)
    return Section(
        sec.m,
        sec.weight - 1,
        lambda r: _nabla(sec, r),
        (1,) + tuple(a + 2 for a in sec.vec_axes),
        sec.scheme.nested(),
    )


def lift(sec: Section) -> Callable[[np.ndarray], np.ndarray]:
    """Equivariant lift F(x) = |q|^{2w} R(q^-1) ... R(q^-1) F(rho) on homogeneous coordinates."""

    def F(x):
        x = np.asarray(x, dtype=float).reshape(sec.m, 3)
        rho, q = project(x)
        t = sec(rho)
        R = adjoint_arr(qinv(q))[1:, 1:] / 1.0
        for ax in sec.vec_axes:
            t = np.moveaxis(np.tensordot(R, t, axes=(1, ax)), 0, ax)
        return qnorm2(q) ** sec.weight * t

    return F


def lift_residual(sec: Section, rho, q, scheme: DerivScheme = DEFAULT_SCHEME) -> float:
    """d_{x^I_i} F = |q|^{2w-2} R_ij(q^-1) R..R nabla_{Ij} F at x = embed(rho, q)."""
    rho = np.asarray(rho, dtype=float)
    m = sec.m
    x = embed(rho, q)
    F = lift(sec)
    lhs = partials(lambda y: F(y.reshape(m, 3)), x.ravel(), scheme)
    lhs = lhs.reshape((m, 3) + lhs.shape[1:])
    nab = cov_deriv(sec, rho)
    R = adjoint_arr(qinv(q))[1:, 1:]
    rhs = np.einsum("ij,Ij...->Ii...", R, nab)
    for ax in sec.vec_axes:
        rhs = np.moveaxis(np.tensordot(R, rhs, axes=(1, ax + 2)), 0, ax + 2)
    rhs = qnorm2(q) ** (sec.weight - 1) * rhs
    return sup(lhs - rhs)


def section_constraints_residual(sec: Section, rho, detail: bool = False):
    """-rho^I x nabla_I F = rotation term and rho^I . nabla_I F = w F."""
    rho = np.asarray(rho, dtype=float)
    nab = cov_deriv(sec, rho)
    val = sec(rho)
    rot = -np.einsum("iab,Ia,Ib...->i...", EPS3, rho, nab)
    expect = np.zeros_like(rot)
    for ax in sec.vec_axes:
        # sum over slots of eps_{i j k} F_{..k..}
        t = np.tensordot(EPS3, val, axes=(2, ax))  # (i, j, rest without ax)
        expect = expect + np.moveaxis(t, 1, ax + 1)
    res = {
        "rotation": sup(rot - expect),
        "scaling": sup(np.einsum("Ia,Ia...->...", rho, nab) - sec.weight * val),
    }
    worst = max(res.values())
    return (worst, res) if detail else worst


def completeness_check(rho, coeffs: ConnCoeffs | None = None, sections=None) -> float:
    """Residual of the four defining conditions, applied to test sections.

    dRho . nabla = d and dRho . A = 0 are checked on the free slots; the
    contracted conditions L A = 1 and L D = 0 are checked directly.
    """
    rho = np.asarray(rho, dtype=float)
    m = rho.shape[0]
    cc = conn_coeffs(rho) if coeffs is None else coeffs
    fs = free_slots(m)
    free_A = np.stack([cc.A[I, i] for I, i in fs])
    free_D = np.stack([cc.D[I, i] for I, i in fs])
    res = [
        sup(free_A),
        sup(free_D - np.eye(len(fs))),
        sup(np.einsum("aiI,Iib->ab", cc.L, cc.A) - np.eye(4)),
        sup(np.einsum("aiI,Iif->af", cc.L, cc.D)),
    ]
    if sections is None:
        sections = [
            Section(m, 0, lambda r: np.sin(r[1, 0]) + r[1, 1] ** 2 + r[m - 1, 1] * r[1, 0]),
            Section(m, 0, lambda r: np.float64(1.0)),
        ]
    for sec in sections:
        nab = cov_deriv(sec, rho, cc)
        grad = partials(lambda f: sec.fn(from_free(f, m)), to_free(rho), sec.scheme)
        res.append(sup(np.stack([nab[I, i] for I, i in fs]) - grad))
    return max(res)


def flatness_residual(sec: Section, rho) -> float:
    """max |[nabla_Ii, nabla_Jj] F| via nested covariant derivatives."""
    second = cov_deriv(cov_deriv(sec), rho)  # (J, j, I, i, ...)
    return sup(second - np.swapaxes(np.swapaxes(second, 0, 2), 1, 3))
