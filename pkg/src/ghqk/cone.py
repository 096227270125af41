"""Hyperkaehler cone structure on extended Gibbons-Hawking data.

Collective generators act on configurations of m points in R^3:
L_vec = -x^K x d_K (rotations) and L_0 = x^K . d_K (scalings).  With this
normalization [L_i, L_j] = eps_ijk L_k and [L_i, L_0] = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import dual
from .excalc import (
    DEFAULT_SCHEME,
    DUAL,
    DerivScheme,
    KForm,
    VectorField,
    bracket,
    d,
    interior,
    lie_form,
    partials,
    sup,
)
from .gh import GHData, field_strength, hk_forms
from .quatmath import EPS3

NESTED_H = 3e-3

__all__ = [
    "ConePotential",
    "ConeReport",
    "collective_generators",
    "base_generators",
    "hkc_higgs_residual",
    "hk_potential",
    "potential_to_higgs",
    "potential_constraints",
    "del_u_residual",
    "gauge_fix_residual",
    "lifted_generators",
    "c_forms",
    "cone_criterion_residual",
    "general_identity_residual",
    "obstruction_identity_residual",
    "xc_residual",
    "starc0_residual",
    "generator_algebra_check",
    "collinear",
    "line_potential",
    "three_center_potential",
    "two_center_potential",
    "higgs_round_trip",
    "higgs_is_degenerate",
]


@dataclass
class ConePotential:
    """Hyperkaehler potential U(x) on configurations x of shape (m, 3).

    The evaluator should use ring operations and numpy ufuncs only, so that
    dual numbers can pass through it for exact second derivatives.
    """

    m: int
    fn: Callable[[np.ndarray], object]
    scheme: DerivScheme = field(default_factory=lambda: DerivScheme(DUAL))

    def __call__(self, x) -> float:
        return float(np.real(self.fn(np.asarray(x, dtype=float).reshape(self.m, 3))))

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(self.m, 3)
        flat = lambda y: self.fn(np.asarray(y).reshape(self.m, 3))
        return np.real(partials(flat, x.ravel(), self.scheme)).reshape(self.m, 3)

    def hessian(self, x) -> np.ndarray:
        """Second partials, shape (m, 3, m, 3)."""
        x = np.asarray(x, dtype=float).reshape(self.m, 3)
        flat = lambda y: self.fn(np.asarray(y).reshape(self.m, 3))
        if self.scheme.mode == DUAL:
            h = dual.hessian(flat, x.ravel())
        else:
            g = lambda y: partials(flat, y, self.scheme)
            h = partials(g, x.ravel(), self.scheme)
            h = 0.5 * (h + h.T)
        return np.real(h).reshape(self.m, 3, self.m, 3)


@dataclass
class ConeReport:
    residuals: dict[str, float]
    tolerances: dict[str, float]
    samples: int
    seed: int | None = None

    @property
    def passed(self) -> dict[str, bool]:
        return {k: v <= self.tolerances.get(k, np.inf) for k, v in self.residuals.items()}


def collinear(x, rel: float = 1e-6, pair: tuple[int, int] = (0, 1)) -> bool:
    """True when the defining pair of points is (nearly) collinear with the origin."""
    x = np.asarray(x, dtype=float)
    a, b = x[pair[0]], x[pair[1]]
    scale = max(np.linalg.norm(a) * np.linalg.norm(b), 1e-300)
    return np.linalg.norm(np.cross(a, b)) <= rel * scale


def base_generators(x) -> np.ndarray:
    """Components of L_0, L_1, L_2, L_3 on the 3m base; shape (4, m, 3)."""
    x = np.asarray(x)
    out = np.zeros((4,) + x.shape, dtype=x.dtype if x.dtype == object else float)
    out[0] = x
    # (L_i)^{K c} = -eps_ibc x^K_b
    for i in range(3):
        out[i + 1] = -np.einsum("bc,Kb->Kc", EPS3[i], x)
    return out


def collective_generators(x) -> tuple[VectorField, list[VectorField]]:
    """(L_0, [L_1, L_2, L_3]) as vector fields on the 3m-dimensional base.

    ``x`` is either the number of points m or a configuration of shape (m, 3).
    """
    m = int(x) if np.ndim(x) == 0 else np.asarray(x).reshape(-1, 3).shape[0]

    def make(a):
        return VectorField(3 * m, lambda p: base_generators(p.reshape(m, 3))[a].ravel())

    return make(0), [make(a) for a in (1, 2, 3)]


def _apply_base(fn: Callable, x, scheme: DerivScheme) -> np.ndarray:
    """L_a applied to an array-valued function of the base; shape (4, ...)."""
    x = np.asarray(x, dtype=float)
    m = x.shape[0]
    grad = partials(lambda y: fn(y.reshape(m, 3)), x.ravel(), scheme)
    gens = base_generators(x).reshape(4, 3 * m)
    return np.tensordot(gens, grad, axes=(1, 0))


def hkc_higgs_residual(gh: GHData, x) -> float:
    """max over components of |L_vec U_IJ| and |L_0 U_IJ + U_IJ|."""
    LU = _apply_base(gh.U, x, gh.scheme)
    U = gh.U(x)
    return max(sup(LU[1:]), sup(LU[0] + U))


def hk_potential(gh: GHData, x) -> float:
    """U = 2 U_IJ x^I . x^J."""
    x = np.asarray(x, dtype=float).reshape(gh.m, 3)
    return float(2.0 * np.einsum("IJ,Ia,Ja->", gh.U(x), x, x))


def potential_to_higgs(pot: ConePotential, x) -> np.ndarray:
    """U_IJ = 1/4 d_I . d_J U."""
    h = pot.hessian(x)
    return 0.25 * np.einsum("IaJa->IJ", h)


def del_u_residual(pot: ConePotential, x, higgs: np.ndarray | None = None) -> float:
    """Residual of d_I U = 2 U_IJ x^J."""
    x = np.asarray(x, dtype=float).reshape(pot.m, 3)
    U = potential_to_higgs(pot, x) if higgs is None else higgs
    return sup(pot.gradient(x) - 2.0 * U @ x)


def potential_constraints(pot: ConePotential, x, detail: bool = False):
    """Max residual of d_I x d_J U = 0, L_vec U = 0 and L_0 U = U (plus the gradient relation)."""
    x = np.asarray(x, dtype=float).reshape(pot.m, 3)
    h = pot.hessian(x)
    cross = np.einsum("kab,IaJb->IJk", EPS3, h)
    grad = pot.gradient(x)
    gens = base_generators(x)
    LU = np.einsum("aKc,Kc->a", gens, grad)
    res = {
        "cross": sup(cross),
        "rotation": sup(LU[1:]),
        "scaling": float(abs(LU[0] - pot(x))),
        "del_U": del_u_residual(pot, x),
    }
    worst = max(res.values())
    return (worst, res) if detail else worst


def _iota_LA(gh: GHData, x) -> np.ndarray:
    """iota_{L_a} A_I; shape (4, m)."""
    gens = base_generators(x).reshape(4, -1)
    A = gh.A(x).reshape(gh.m, -1)
    return gens @ A.T


def _xa(x) -> np.ndarray:
    """x_a^J with x_0^J = 0; shape (4, m)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros((4, x.shape[0]))
    out[1:] = x.T
    return out


def gauge_fix_residual(gh: GHData, x, detail: bool = False):
    """Residual of iota_{L_a} A_I = -U_IJ x_a^J, per a = 0..3 when ``detail``."""
    x = np.asarray(x, dtype=float).reshape(gh.m, 3)
    r = _iota_LA(gh, x) + _xa(x) @ gh.U(x)
    per = np.max(np.abs(r), axis=1)
    return (float(per.max()), per) if detail else float(per.max())


def lifted_generators(gh: GHData) -> list[VectorField]:
    """X_a = L_a - (iota_{L_a} A_I + U_IJ x_a^J) d/dpsi_I on the 4m chart."""
    m = gh.m

    def make(a):
        def fn(p):
            x, _ = gh.split(p)
            vert = _iota_LA(gh, x)[a] + gh.U(x) @ _xa(x)[a]
            return np.concatenate([base_generators(x)[a].ravel(), -vert])

        return VectorField(4 * m, fn)

    return [make(a) for a in range(4)]


def _dx_tensor(m: int) -> np.ndarray:
    """E[J, b, :] is dx^J_b on the 4m chart."""
    E = np.zeros((m, 3, 4 * m))
    for J in range(m):
        for b in range(3):
            E[J, b, 3 * J + b] = 1.0
    return E


def c_forms(gh: GHData) -> KForm:
    """The 1-forms c_{Ia}; values (m, 4), a = 0 is c_I0 and a = 1..3 are c_vec_I."""
    m = gh.m
    E = _dx_tensor(m)

    def fn(p):
        x, _ = gh.split(p)
        LU = _apply_base(gh.U, x, gh.scheme)  # (4, I, J)
        U = gh.U(x)
        out = np.zeros((m, 4, 4 * m))
        out[:, 0] = np.einsum("aIJ,Jan->In", LU[1:], E)
        # c_vec_I,k = -eps_kab (L_a U_IJ) dx^J_b - (L_0 U_IJ + U_IJ) dx^J_k
        out[:, 1:] = -np.einsum("kab,aIJ,Jbn->Ikn", EPS3, LU[1:], E) - np.einsum(
            "IJ,Jkn->Ikn", LU[0] + U, E
        )
        return out

    return KForm(1, 4 * m, fn, (m, 4))


def _star(coef: np.ndarray, m: int) -> np.ndarray:
    """*^I applied to 1-forms w_I = coef[I, :] dx; returns the 2-form tensor sum_I *^I w_I.

    *^I dx^J_b = 1/2 eps_bcd dx^I_c ^ dx^J_d.
    """
    c = coef[:, : 3 * m].reshape(m, m, 3)  # [I, J, b]
    t = 0.5 * np.einsum("IJb,bcd->IcJd", c, EPS3).reshape(3 * m, 3 * m)
    t = t - t.T
    out = np.zeros((4 * m, 4 * m))
    out[: 3 * m, : 3 * m] = t
    return out


def _scalar_form(m: int, f: Callable) -> KForm:
    return KForm(0, 4 * m, f)


def _pot_half(gh: GHData) -> Callable:
    def f(p):
        x, _ = gh.split(p)
        return np.einsum("IJ,Ia,Ja->", gh.U(x), x, x)

    return f


def general_identity_residual(gh: GHData, p, detail: bool = False):
    """Identities valid for any GH data (no field equations).

    iota_{X_i} Om_j = eps_ijk iota_{X_0} Om_k - 1/2 delta_ij U_IJ d(x^I . x^J)
    L_{X_0} Om_k = Om_k - 1/2 (L_0 U + U)_IJ (dx^I ^ dx^J)_k + (iota_{L_0} F_I) ^ dx^I_k
    """
    m = gh.m
    sch = gh.scheme
    om = hk_forms(gh).forms
    X = lifted_generators(gh)
    E = _dx_tensor(m)
    x, _ = gh.split(p)
    U = gh.U(x)
    iX = np.stack([interior(Xa, om)(p) for Xa in X])  # (4, 3, n)
    # U_IJ d(x^I . x^J) = 2 U_IJ x^J_a dx^I_a
    dxx = 2.0 * np.einsum("IJ,Ja,Ian->n", U, x, E)
    r1 = 0.0
    for i in range(3):
        for j in range(3):
            rhs = np.einsum("k,kn->n", EPS3[i, j], iX[0]) - (0.5 * dxx if i == j else 0.0)
            r1 = max(r1, sup(iX[i + 1, j] - rhs))
    lie = lie_form(X[0], om, sch)(p)
    LU0 = _apply_base(gh.U, x, sch)[0]
    W = LU0 + U
    t = -0.5 * np.einsum("IJ,kij,Iin,Jjq->knq", W, EPS3, E, E)
    t = t - np.transpose(t, (0, 2, 1))
    F = field_strength(gh, x)  # (m, 3m, 3m)
    gens0 = base_generators(x)[0].ravel()
    iLF = np.einsum("n,Inq->Iq", gens0, F)  # (m, 3m)
    iLF_full = np.zeros((m, 4 * m))
    iLF_full[:, : 3 * m] = iLF
    w = np.einsum("Iq,Ikr->kqr", iLF_full, E)
    w = w - np.transpose(w, (0, 2, 1))
    r2 = sup(lie - (om(p) + t + w))
    res = {"interior": r1, "lie": r2}
    worst = max(res.values())
    return (worst, res) if detail else worst


def obstruction_identity_residual(gh: GHData, p, detail: bool = False):
    """Identities in the form using the field equations and the c-forms.

    iota_{X_i} Om_j = eps_ijk iota_{X_0} Om_k - delta_ij [d(U_IJ x^I.x^J) + x^I . c_I]
    L_{X_0} Om_k = Om_k + *^I c_Ik
    """
    m = gh.m
    sch = gh.scheme
    om = hk_forms(gh).forms
    X = lifted_generators(gh)
    x, _ = gh.split(p)
    iX = np.stack([interior(Xa, om)(p) for Xa in X])
    dpot = d(_scalar_form(m, _pot_half(gh)), sch)(p)
    c = c_forms(gh)(p)  # (m, 4, n)
    xc = np.einsum("Ia,Ian->n", x, c[:, 1:])
    r1 = 0.0
    for i in range(3):
        for j in range(3):
            rhs = np.einsum("k,kn->n", EPS3[i, j], iX[0]) - ((dpot + xc) if i == j else 0.0)
            r1 = max(r1, sup(iX[i + 1, j] - rhs))
    lie = lie_form(X[0], om, sch)(p)
    starc = np.stack([_star(c[:, 1 + k], m) for k in range(3)])
    r2 = sup(lie - (om(p) + starc))
    res = {"interior": r1, "lie": r2}
    worst = max(res.values())
    return (worst, res) if detail else worst


def xc_residual(gh: GHData, p) -> float:
    """x^I . c_I = 1/2 U_IJ d(x^I . x^J) - d(U_IJ x^I . x^J)."""
    m = gh.m
    x, _ = gh.split(p)
    c = c_forms(gh)(p)
    lhs = np.einsum("Ia,Ian->n", x, c[:, 1:])
    E = _dx_tensor(m)
    half = np.einsum("IJ,Ja,Ian->n", gh.U(x), x, E)
    dpot = d(_scalar_form(m, _pot_half(gh)), gh.scheme)(p)
    return sup(lhs - (half - dpot))


def starc0_residual(gh: GHData, p) -> float:
    """*^I c_I0 = d(x^I . c_I)."""
    m = gh.m
    cf = c_forms(gh)

    def xc(q):
        x, _ = gh.split(q)
        return np.einsum("Ia,Ian->n", x, cf(q)[:, 1:])

    rhs = d(KForm(1, 4 * m, xc), gh.scheme.nested(NESTED_H))(p)
    lhs = _star(cf(p)[:, 0], m)
    return sup(lhs - rhs)


def cone_criterion_residual(gh: GHData, p, detail: bool = False):
    """Residual of the cone criterion for the lifts, valid once the Higgs constraints hold.

    iota_{X_i} Om_j - eps_ijk iota_{X_0} Om_k + delta_ij d(U_IJ x^I.x^J) and L_{X_0} Om - Om.
    """
    m = gh.m
    sch = gh.scheme
    om = hk_forms(gh).forms
    X = lifted_generators(gh)
    iX = np.stack([interior(Xa, om)(p) for Xa in X])
    dpot = d(_scalar_form(m, _pot_half(gh)), sch)(p)
    r1 = 0.0
    for i in range(3):
        for j in range(3):
            rhs = np.einsum("k,kn->n", EPS3[i, j], iX[0]) - (dpot if i == j else 0.0)
            r1 = max(r1, sup(iX[i + 1, j] - rhs))
    r2 = sup(lie_form(X[0], om, sch)(p) - om(p))
    res = {"interior": r1, "lie": r2}
    worst = max(res.values())
    return (worst, res) if detail else worst


def generator_algebra_check(gh: GHData, p, detail: bool = False):
    """[X_i, X_j] = eps_ijk X_k and [X_i, X_0] = 0 for the lifted generators."""
    X = lifted_generators(gh)
    sch = gh.scheme
    res = {}
    for i, j, k in ((1, 2, 3), (2, 3, 1), (3, 1, 2)):
        res[f"[X{i},X{j}]"] = sup(bracket(X[i], X[j], sch)(p) - X[k](p))
    for i in (1, 2, 3):
        res[f"[X{i},X0]"] = sup(bracket(X[i], X[0], sch)(p))
    worst = max(res.values())
    if detail:
        # vertical parts of the lifts vanish exactly when A is gauge fixed
        x, _ = gh.split(p)
        res["vertical_defect"] = gauge_fix_residual(gh, x)
    return (worst, res) if detail else worst


def _norm(v):
    return np.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])


def line_potential(vectors, weights=None) -> ConePotential:
    """U = sum_k w_k |v_k^J x^J|, the potential of the matching line solution."""
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    w = np.ones(len(V)) if weights is None else np.asarray(weights, dtype=float)

    def fn(x):
        total = 0.0
        for vk, wk in zip(V, w):
            y = sum(vk[J] * x[J] for J in range(V.shape[1]))
            total = total + wk * _norm(y)
        return total

    return ConePotential(V.shape[1], fn)


def three_center_potential() -> ConePotential:
    """U = 2(|x0| + |x1| + |x0 + x1|)."""
    return line_potential([[1, 0], [0, 1], [1, 1]], [2, 2, 2])


def two_center_potential() -> ConePotential:
    """U = |x0| + |x1|, dual to diag(1/(2|x0|), 1/(2|x1|))."""
    return line_potential([[1, 0], [0, 1]])


def higgs_round_trip(gh: GHData, x) -> float:
    """Higgs -> potential -> Higgs deviation, with the Hessian taken by nested differences."""
    x = np.asarray(x, dtype=float).reshape(gh.m, 3)
    pot = ConePotential(gh.m, lambda y: hk_potential(gh, y), DEFAULT_SCHEME.nested(NESTED_H))
    return sup(potential_to_higgs(pot, x) - gh.U(x))


def higgs_is_degenerate(U, rtol: float = 1e-12) -> bool:
    """Flag a Higgs matrix whose smallest singular value is negligible."""
    s = np.linalg.svd(np.asarray(U, dtype=float), compute_uv=False)
    return bool(s[-1] <= rtol * max(s[0], 1e-300))
