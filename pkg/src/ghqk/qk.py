"""Quaternionic Kaehler Ansatz built from reduced Gibbons-Hawking data.

Chart on the 4n-dimensional space M: the first 3n - 1 coordinates are the
free inhomogeneous coordinates (see module imhp), the last n + 1 are psi_I.

Quaternion-valued forms are stored with a leading axis of length 4.  For
quaternion 1-forms a, b the wedge is a(X) b(Y) - a(Y) b(X) and the symmetric
product a(X) b(Y) + a(Y) b(X), matching module gh.  Only s*omega and s*g are
assembled; the constant s is never divided out.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import imhp
from .excalc import DEFAULT_SCHEME, DerivScheme, KForm, MetricField, VectorField, d, lie_metric, partials, sup, wedge
from .gh import GHData, hk_forms, hk_metric
from .quatmath import EPS3, qmul

log = logging.getLogger(__name__)

__all__ = [
    "ReductionError",
    "DomainError",
    "ReducedData",
    "QKStructure",
    "reduce_higgs",
    "reduce_connection",
    "reduce_gh",
    "lift_to_gh",
    "red_bogo1_residual",
    "red_bogo2_residual",
    "theta",
    "theta0_check",
    "theta_quat_check",
    "qk_structure",
    "ansatz_variants_check",
    "algebraic_qk_check",
    "einstein_residual",
    "differential_condition_residual",
    "moment_map_residual",
    "killing_residual",
    "swann_consistency",
    "moment_lift_check",
    "sigma_r",
]

MULT = np.stack([np.stack([qmul(np.eye(4)[a], np.eye(4)[b]) for b in range(4)]) for a in range(4)])
_CONJ = np.array([1.0, -1.0, -1.0, -1.0])


class ReductionError(ValueError):
    """GH data does not descend (not equivariant within tolerance)."""


class DomainError(ValueError):
    """Point where the Ansatz is undefined (vanishing potential or singular Higgs field)."""


def _qconj(a: np.ndarray) -> np.ndarray:
    return _CONJ.reshape((4,) + (1,) * (a.ndim - 1)) * a


def _qouter(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """T[c, m, n] = (a(d_m) b(d_n))_c for quaternion 1-forms (4, dim)."""
    return np.einsum("abc,am,bn->cmn", MULT, a, b)


def _qwedge(a, b):
    t = _qouter(a, b)
    return t - np.swapaxes(t, 1, 2)


def _qsym(a, b):
    t = _qouter(a, b)
    return t + np.swapaxes(t, 1, 2)


def _vwedge(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(a ^ b)_k = eps_kij a_i ^ b_j for R^3-valued 1-forms (3, dim)."""
    t = np.einsum("kij,im,jn->kmn", EPS3, a, b)
    return t - np.swapaxes(t, 1, 2)


def _sym(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    t = np.multiply.outer(a, b)
    return t + t.T


def _wedge1(a, b):
    t = np.multiply.outer(a, b)
    return t - t.T


@dataclass
class ReducedData:
    """Reduced Higgs field and connection on the canonical chart of Im HP^n.

    ``higgs(rho)`` returns the (n+1) x (n+1) matrix U_IJ at a restricted
    configuration; ``conn(rho)`` returns the 1-forms A_I as an array of shape
    (n+1, 3n-1) on the free coordinates.
    """

    n: int
    higgs: Callable[[np.ndarray], np.ndarray]
    conn: Callable[[np.ndarray], np.ndarray]
    s: float = 1.0
    scheme: DerivScheme = DEFAULT_SCHEME
    name: str = "custom"

    def __post_init__(self):
        if self.s == 0:
            raise ValueError("s must be nonzero")

    @property
    def m(self) -> int:
        return self.n + 1

    @property
    def nfree(self) -> int:
        return 3 * self.n - 1

    @property
    def dim(self) -> int:
        return 4 * self.n

    def split(self, p) -> tuple[np.ndarray, np.ndarray]:
        p = np.asarray(p, dtype=float)
        return imhp.from_free(p[: self.nfree], self.m), p[self.nfree :]

    def point(self, rho, psi=None) -> np.ndarray:
        psi = np.zeros(self.m) if psi is None else np.asarray(psi, dtype=float)
        return np.concatenate([imhp.to_free(np.asarray(rho, dtype=float)), psi])

    def U(self, rho) -> np.ndarray:
        return np.asarray(self.higgs(np.asarray(rho, dtype=float)), dtype=float)

    def A(self, rho) -> np.ndarray:
        return np.asarray(self.conn(np.asarray(rho, dtype=float)), dtype=float)

    def potential(self, rho) -> float:
        rho = np.asarray(rho, dtype=float)
        return float(2.0 * np.einsum("IJ,Ia,Ja->", self.U(rho), rho, rho))

    def higgs_section(self) -> imhp.Section:
        return imhp.Section(self.m, -1, self.higgs, (), self.scheme)

    def potential_section(self) -> imhp.Section:
        return imhp.Section(self.m, 1, self.potential, (), self.scheme)

    def drho(self) -> np.ndarray:
        """E[I, i, :] = d rho^I_i on the 4n chart."""
        E = np.zeros((self.m, 3, self.dim))
        for f, (I, i) in enumerate(imhp.free_slots(self.m)):
            E[I, i, f] = 1.0
        return E

    def B(self, p) -> np.ndarray:
        """Rows dpsi_I + A_I on the 4n chart."""
        rho, _ = self.split(p)
        out = np.zeros((self.m, self.dim))
        out[:, : self.nfree] = self.A(rho)
        out[:, self.nfree :] = np.eye(self.m)
        return out


# ---------------------------------------------------------------- reduction


# generic reference fiber point: keeps x^0 = qbar rho^0 q off the z^0 = 0 locus of the canonical chart
Q_REF = np.array([0.8, 0.3, -0.4, 0.35])


def _random_q(rng, k):
    return [rng.normal(size=4) for _ in range(k)]


def reduce_higgs(gh: GHData, tol: float = 1e-8, seed: int = 0) -> Callable[[np.ndarray], np.ndarray]:
    """U_IJ(rho) = |q|^2 U_IJ(qbar rho q), read off at Q_REF and certified at 3 random q per call."""
    rng = np.random.default_rng(seed)
    qs = [Q_REF] + _random_q(rng, 3)

    def higgs(rho):
        rho = np.asarray(rho, dtype=float)
        vals = [np.dot(q, q) * gh.U(imhp.embed(rho, q)) for q in qs]
        spread = max(sup(v - vals[0]) for v in vals[1:])
        if spread > tol * max(1.0, sup(vals[0])):
            raise ReductionError(f"Higgs field is not equivariant (spread {spread:.3e})")
        return vals[0]

    return higgs


def _base_jacobian(rho, q) -> np.ndarray:
    """Columns: dx/d(free rho) and dx/d(sigma_0, sigma_vec) at x = qbar rho q."""
    rho = np.asarray(rho, dtype=float)
    m = rho.shape[0]
    cols = []
    for I, i in imhp.free_slots(m):
        e = np.zeros((m, 3))
        e[I, i] = 1.0
        cols.append(imhp.embed(e, q).ravel())
    cols.append(imhp.embed(-2.0 * rho, q).ravel())
    for k in range(3):
        uk = np.zeros(3)
        uk[k] = 1.0
        cols.append(imhp.embed(2.0 * np.cross(uk, rho), q).ravel())
    return np.stack(cols, axis=1)


def sigma_r(x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(rho, q, S) where S maps dx (flattened) to (d rho_free, sigma_0, sigma_vec)."""
    rho, q = imhp.project(x)
    return rho, q, np.linalg.inv(_base_jacobian(rho, q))


def reduce_connection(gh: GHData, tol: float = 1e-8, seed: int = 0) -> Callable[[np.ndarray], np.ndarray]:
    """A_I on free coordinates, read off at Q_REF and certified at random q."""
    rng = np.random.default_rng(seed + 1)
    qs = [Q_REF] + _random_q(rng, 3)

    def conn(rho):
        rho = np.asarray(rho, dtype=float)
        m = rho.shape[0]
        nf = 3 * m - 4
        vals = []
        for q in qs:
            x = imhp.embed(rho, q)
            A = gh.A(x).reshape(m, 3 * m)
            vals.append(A @ _base_jacobian(rho, q)[:, :nf])
        spread = max(sup(v - vals[0]) for v in vals[1:])
        if spread > tol * max(1.0, sup(vals[0])):
            raise ReductionError(f"connection is not equivariant or not gauge fixed (spread {spread:.3e})")
        return vals[0]

    return conn


def reduce_gh(gh: GHData, s: float = 1.0, tol: float = 1e-8) -> ReducedData:
    if gh.m < 2:
        raise ValueError("reduction needs at least two points")
    return ReducedData(gh.m - 1, reduce_higgs(gh, tol), reduce_connection(gh, tol), s, gh.scheme, gh.name)


def lift_to_gh(rd: ReducedData) -> GHData:
    """Gauge-fixed GH data on the cone: U_IJ = U_IJ(rho)/|q|^2, A = A(rho) + 2 (U rho) . sigma_R."""
    m = rd.m
    nf = rd.nfree

    def higgs(x):
        rho, q = imhp.project(x)
        return rd.U(rho) / np.dot(q, q)

    def conn(x):
        rho, q, S = sigma_r(x)
        Ur = rd.U(rho) @ rho  # (m, 3)
        A = rd.A(rho) @ S[:nf] + 2.0 * Ur @ S[nf + 1 :]
        return A.reshape(m, m, 3)

    return GHData(m, higgs, conn, rd.scheme, name=f"lift({rd.name})")


# ---------------------------------------------------------------- field equations


def red_bogo1_residual(rd: ReducedData, rho) -> float:
    """nabla_I U_KJ = nabla_J U_KI."""
    nab = imhp.cov_deriv(rd.higgs_section(), rho)  # (I, i, K, J)
    return sup(nab - np.einsum("JiKI->IiKJ", nab))


def red_bogo2_residual(rd: ReducedData, rho) -> float:
    """dA_K = 1/2 nabla_Ii U_KJ eps_iab drho^I_a ^ drho^J_b on the free coordinates."""
    rho = np.asarray(rho, dtype=float)
    m, nf = rd.m, rd.nfree
    f0 = imhp.to_free(rho)
    g = partials(lambda f: rd.conn(imhp.from_free(f, m)), f0, rd.scheme)  # (f, K, g)
    F = np.transpose(g, (1, 0, 2))
    F = F - np.swapaxes(F, 1, 2)
    nab = imhp.cov_deriv(rd.higgs_section(), rho)
    E = rd.drho()[:, :, :nf]
    t = 0.5 * np.einsum("IiKJ,iab,Iaf,Jbg->Kfg", nab, EPS3, E, E)
    return sup(F - (t - np.swapaxes(t, 1, 2)))


# ---------------------------------------------------------------- structure


def _pieces(rd: ReducedData, p) -> dict:
    rho, _ = rd.split(p)
    U = rd.U(rho)
    pot = 2.0 * np.einsum("IJ,Ia,Ja->", U, rho, rho)
    if abs(pot) < 1e-12:
        raise DomainError("reduced potential vanishes")
    c = np.linalg.cond(U)
    if not np.isfinite(c) or c > 1e13:
        raise DomainError(f"reduced Higgs field singular (condition {c:.3e})")
    Ui = np.linalg.inv(U)
    E = rd.drho()
    B = rd.B(p)
    Ur = U @ rho  # (m, 3): U_IJ rho^J
    th0 = np.einsum("Ia,Iam->m", Ur, E) / pot
    thv = -(np.einsum("kab,Ia,Ibm->km", EPS3, Ur, E) + np.einsum("Ik,Im->km", rho, B)) / pot
    return dict(rho=rho, U=U, Ui=Ui, pot=pot, E=E, B=B, Ur=Ur, th0=th0, thv=thv)


def theta(rd: ReducedData) -> tuple[KForm, KForm]:
    """(theta_0, theta_vec) with theta_0 = U_IJ rho^J . drho^I / U."""
    return (
        KForm(1, rd.dim, lambda p: _pieces(rd, p)["th0"]),
        KForm(1, rd.dim, lambda p: _pieces(rd, p)["thv"], (3,)),
    )


def theta0_check(rd: ReducedData, p) -> float:
    """Agreement of the two expressions theta_0 = (1/U) U_IJ rho^J . drho^I = dU / 2U."""
    P = _pieces(rd, p)
    dU = d(KForm(0, rd.dim, lambda q: rd.potential(rd.split(q)[0])), rd.scheme)(p)
    return sup(P["th0"] - dU / (2.0 * P["pot"]))


def _quat_basics(rd: ReducedData, P: dict):
    m = rd.m
    rq = np.zeros((m, 4))
    rq[:, 1:] = P["rho"]
    h = np.zeros((m, 4, rd.dim))
    h[:, 0] = P["Ui"] @ P["B"]
    h[:, 1:] = P["E"]
    return rq, h


def theta_quat_check(rd: ReducedData, p) -> float:
    """theta = U_IJ rhobar^I h^J / (2 U_MN rhobar^M rho^N) against (theta_0, theta_vec)."""
    P = _pieces(rd, p)
    rq, h = _quat_basics(rd, P)
    th = np.einsum("IJ,abc,Ia,Jbm->cm", P["U"], MULT, _qconj(rq.T).T, h) / P["pot"]
    return max(sup(th[0] - P["th0"]), sup(th[1:] - P["thv"]))


def _set_vector(rd, P):
    rho, U, pot = P["rho"], P["U"], P["pot"]
    th0, thv = P["th0"], P["thv"]
    e = P["E"] - 2.0 * np.einsum("m,Ik->Ikm", th0, rho) + 2.0 * np.einsum("kab,am,Ib->Ikm", EPS3, thv, rho)
    b = P["B"] + 2.0 * np.einsum("Ik,km->Im", P["Ur"], thv)
    om = np.zeros((3, rd.dim, rd.dim))
    for I in range(rd.m):
        for J in range(rd.m):
            om -= U[I, J] / (2.0 * pot) * _vwedge(e[I], e[J])
        for k in range(3):
            om[k] -= _wedge1(e[I, k], b[I]) / pot
    g = np.zeros((rd.dim, rd.dim))
    Ui = P["Ui"]
    for I in range(rd.m):
        for J in range(rd.m):
            g += U[I, J] / (2.0 * pot) * sum(_sym(e[I, k], e[J, k]) for k in range(3))
            g += Ui[I, J] / (2.0 * pot) * _sym(b[I], b[J])
    return om, 0.5 * (g + g.T)


def _set_direct(rd, P, p):
    """The W, nu form; d nu is taken by differences of nu = rho / U."""
    U, pot, thv = P["U"], P["pot"], P["thv"]
    W = pot * U
    Wi = np.linalg.inv(W)
    nu = P["rho"] / pot
    dnu = partials(lambda q: rd.split(q)[0] / rd.potential(rd.split(q)[0]), p, rd.scheme)  # (mu, I, k)
    dnu = np.transpose(dnu, (1, 2, 0))
    th = -np.einsum("IJ,kab,Ja,Ibm->km", W, EPS3, nu, dnu) - np.einsum("Ik,Im->km", nu, P["B"])
    f = dnu + 2.0 * np.einsum("kab,am,Ib->Ikm", EPS3, th, nu)
    c = P["B"] + 2.0 * np.einsum("IK,Kk,km->Im", W, nu, th)
    om = np.zeros((3, rd.dim, rd.dim))
    g = np.zeros((rd.dim, rd.dim))
    for I in range(rd.m):
        for J in range(rd.m):
            om -= 0.5 * W[I, J] * _vwedge(f[I], f[J])
            g += 0.5 * W[I, J] * sum(_sym(f[I, k], f[J, k]) for k in range(3))
            g += 0.5 * Wi[I, J] * _sym(c[I], c[J])
        for k in range(3):
            om[k] -= _wedge1(f[I, k], c[I])
    return th, om, 0.5 * (g + g.T)


def _set_quat1(rd, P):
    rq, h = _quat_basics(rd, P)
    U, pot = P["U"], P["pot"]
    hb = _qconj(np.moveaxis(h, 1, 0))  # (4, m, dim)
    hh = np.moveaxis(h, 1, 0)
    rb = _qconj(rq.T)  # (4, m)
    X = np.einsum("IL,abc,aIm,bL->cm", U, MULT, hb, rq.T)
    Y = np.einsum("KJ,abc,aK,bJm->cm", U, MULT, rb, hh)
    T = np.einsum("IJ,abc,aIm,bJn->cmn", U, MULT, hb, hh)
    half = pot / 2.0
    om = (half * (T - np.swapaxes(T, 1, 2)) - _qwedge(X, Y)) / pot**2
    g = (half * (T + np.swapaxes(T, 1, 2)) - _qsym(X, Y)) / pot**2
    return om, g


def _set_quat2(rd, P):
    rq, h = _quat_basics(rd, P)
    th = np.concatenate([P["th0"][None], P["thv"]])
    k = np.moveaxis(h, 1, 0) - 2.0 * np.einsum("abc,Ia,bm->cIm", MULT, rq, th)
    T = np.einsum("IJ,abc,aIm,bJn->cmn", P["U"], MULT, _qconj(k), k) / (2.0 * P["pot"])
    return T - np.swapaxes(T, 1, 2), T + np.swapaxes(T, 1, 2)


@dataclass
class QKStructure:
    """theta_0, theta_vec, s omega, s g and moment maps nu^I on the 4n chart."""

    rd: ReducedData
    theta0: KForm
    theta_vec: KForm
    s_omega: KForm
    s_g: MetricField
    nu: Callable[[np.ndarray], np.ndarray]

    @property
    def dim(self) -> int:
        return self.rd.dim

    def omega(self) -> KForm:
        return self.s_omega.scale(1.0 / self.rd.s)

    def metric(self) -> MetricField:
        s = self.rd.s
        return MetricField(self.dim, lambda p: self.s_g(p) / s)


def qk_structure(rd: ReducedData) -> QKStructure:
    th0, thv = theta(rd)

    def om(p):
        return _set_vector(rd, _pieces(rd, p))[0]

    def g(p):
        return _set_vector(rd, _pieces(rd, p))[1]

    def nu(p):
        P = _pieces(rd, p)
        return P["rho"] / P["pot"]

    return QKStructure(rd, th0, thv, KForm(2, rd.dim, om, (3,)), MetricField(rd.dim, g), nu)


def ansatz_variants_check(rd: ReducedData, p, detail: bool = False):
    """Max pairwise deviation between the formula sets for s omega, s g and theta."""
    P = _pieces(rd, p)
    om3, g3 = _set_vector(rd, P)
    thT, omT, gT = _set_direct(rd, P, p)
    om1, g1 = _set_quat1(rd, P)
    om2, g2 = _set_quat2(rd, P)
    res = {
        "quat1_vs_vector_omega": max(sup(om1[1:] - om3), sup(om1[0])),
        "quat1_vs_vector_metric": max(sup(g1[0] - g3), sup(g1[1:])),
        "quat2_vs_vector_omega": max(sup(om2[1:] - om3), sup(om2[0])),
        "quat2_vs_vector_metric": max(sup(g2[0] - g3), sup(g2[1:])),
        "quat1_vs_quat2": max(sup(om1 - om2), sup(g1 - g2)),
        "direct_vs_vector": max(sup(omT - om3), sup(gT - g3), sup(thT - P["thv"])),
        "theta_quat": theta_quat_check(rd, p),
    }
    worst = max(res.values())
    return (worst, res) if detail else worst


def algebraic_qk_check(st: QKStructure, p, detail: bool = False):
    from .gh import algebraic_check

    return algebraic_check(st.s_omega, st.s_g, p, detail)


def einstein_residual(st: QKStructure, s: float | None = None, p=None, theta_vec: KForm | None = None) -> float:
    """d theta_i + eps_ijk theta_j ^ theta_k - s omega_i, relative to max(1, sup|s omega|).

    ``s`` is accepted for symmetry with the formula; s omega is assembled
    directly, so its value does not enter.  The finite-difference error in
    d theta grows with the size of the fields, hence the relative measure.
    """
    thv = st.theta_vec if theta_vec is None else theta_vec
    dth = d(thv, st.rd.scheme)(p)
    t = thv(p)
    quad = 2.0 * np.einsum("kij,im,jn->kmn", EPS3, t, t)
    quad = 0.5 * (quad - np.swapaxes(quad, 1, 2))
    som = st.s_omega(p)
    return sup(dth + quad - som) / max(1.0, sup(som))


def differential_condition_residual(st: QKStructure, p) -> float:
    """d omega_i + 2 eps_ijk theta_j ^ omega_k."""
    dom = d(st.s_omega, st.rd.scheme)(p)
    tw = wedge(st.theta_vec, st.s_omega)(p)  # (j, k, 3-form)
    return sup(dom + 2.0 * np.einsum("ijk,jk...->i...", EPS3, tw))


def moment_map_residual(st: QKStructure, I: int, p, nu: Callable | None = None) -> float:
    """d nu^I + 2 theta x nu^I - i_{d/dpsi_I} s omega."""
    rd = st.rd
    nuf = st.nu if nu is None else nu
    n0 = nuf(p)[I]
    if np.linalg.norm(n0) == 0:
        raise DomainError("moment map vanishes")
    dnu = partials(lambda q: nuf(q)[I], p, rd.scheme).T  # (3, dim)
    cross = np.einsum("kab,am,b->km", EPS3, st.theta_vec(p), n0)
    X = np.zeros(rd.dim)
    X[rd.nfree + I] = 1.0
    iota = np.einsum("kmn,m->kn", st.s_omega(p), X)
    return sup(dnu + 2.0 * cross - iota)


def killing_residual(st: QKStructure, I: int, p) -> float:
    X = np.zeros(st.dim)
    X[st.rd.nfree + I] = 1.0
    return sup(lie_metric(VectorField(st.dim, lambda q: X), st.s_g, st.rd.scheme)(p))


# ---------------------------------------------------------------- Swann bundle


def _swann_jacobian(rd: ReducedData, rho, q) -> np.ndarray:
    """d(x, psi)/d(free rho, psi, q) at x = qbar rho q."""
    m, nf = rd.m, rd.nfree
    J = np.zeros((4 * m, 4 * m))
    Jx = _base_jacobian(rho, q)[:, :nf]
    J[: 3 * m, :nf] = Jx
    J[3 * m :, nf : nf + m] = np.eye(m)
    rq = np.zeros((m, 4))
    rq[:, 1:] = rho
    qb = q * _CONJ
    for a in range(4):
        ua = np.eye(4)[a]
        t = qmul(qmul(ua * _CONJ, rq), q) + qmul(qmul(qb, rq), ua)
        J[: 3 * m, nf + m + a] = t[:, 1:].ravel()
    return J


def _swann_rhs(rd: ReducedData, st: QKStructure, rho, psi, q):
    """Omega and G from the Swann-like expressions on the chart (free rho, psi, q)."""
    m, dim = rd.m, rd.dim
    n4 = dim + 4
    p = np.concatenate([imhp.to_free(rho), psi])
    P = _pieces(rd, p)
    lift = lambda t: np.pad(t, [(0, 0)] * (t.ndim - 1) + [(0, 4)])
    th = lift(np.concatenate([P["th0"][None], P["thv"]]))
    # sigma_R = -dq q^-1
    dq = np.zeros((4, n4))
    dq[:, dim:] = np.eye(4)
    qi = q * _CONJ / np.dot(q, q)
    sig = -np.einsum("abc,am,b->cm", MULT, dq, qi)
    a = sig - th
    som = np.zeros((4, n4, n4))
    som[1:, :dim, :dim] = st.s_omega(p)
    sg = np.zeros((n4, n4))
    sg[:dim, :dim] = st.s_g(p)
    inner = som + _qwedge(_qconj(a), a)
    qb = q * _CONJ
    Om = P["pot"] * np.einsum("abc,a,bmn->cmn", MULT, qb, np.einsum("abc,amn,b->cmn", MULT, inner, q))
    G = P["pot"] * np.dot(q, q) * (sg + _qsym(_qconj(a), a)[0])
    return Om, G, P["pot"]


def swann_consistency(gh: GHData, rd: ReducedData, p, detail: bool = False):
    """Pull the GH 2-forms and metric back to (free rho, psi, q) and compare with the Swann-like expressions.

    The canonical form after the fiber rescaling q' = |U|^{1/2} q is checked as
    well; where U < 0 it carries the sign flip Omega -> -Omega, G -> -G.
    """
    x, psi = gh.split(p)
    rho, q = imhp.project(x)
    st = qk_structure(rd)
    J = _swann_jacobian(rd, rho, q)
    Om_gh = np.einsum("mi,kmn,nj->kij", J, hk_forms(gh)(p), J)
    G_gh = J.T @ hk_metric(gh)(p) @ J
    Om, G, pot = _swann_rhs(rd, st, rho, psi, q)
    res = {
        "omega": max(sup(Om[1:] - Om_gh), sup(Om[0])),
        "metric": sup(G - G_gh),
    }
    # rescaled fiber coordinate: Omega = sign(U) q'bar [s omega + (sigma' - theta_vec)bar ^ (sigma' - theta_vec)] q'
    sgn = np.sign(pot)
    if sgn < 0:
        log.info("negative reduced potential: applying Omega -> -Omega, G -> -G")
    qp = np.sqrt(abs(pot)) * q
    dim = rd.dim
    n4 = dim + 4
    # chain rule for q = q' / |U(rho)|^{1/2}: dq = dq'/|U|^{1/2} - q theta_0
    P = _pieces(rd, np.concatenate([imhp.to_free(rho), psi]))
    C = np.eye(n4)
    C[dim:, dim:] /= np.sqrt(abs(pot))
    C[dim:, :dim] = -np.outer(q, P["th0"])
    Om_c = np.einsum("mi,kmn,nj->kij", C, Om_gh, C)
    G_c = C.T @ G_gh @ C
    thv = np.pad(P["thv"], [(0, 0), (0, 4)])
    dq = np.zeros((4, n4))
    dq[:, dim:] = np.eye(4)
    qpi = qp * _CONJ / np.dot(qp, qp)
    a = -np.einsum("abc,am,b->cm", MULT, dq, qpi)
    a[1:] -= thv
    som = np.zeros((4, n4, n4))
    som[1:, :dim, :dim] = st.s_omega(np.concatenate([imhp.to_free(rho), psi]))
    inner = som + _qwedge(_qconj(a), a)
    Om_can = sgn * np.einsum("abc,a,bmn->cmn", MULT, qp * _CONJ, np.einsum("abc,amn,b->cmn", MULT, inner, qp))
    sg = np.zeros((n4, n4))
    sg[:dim, :dim] = st.s_g(np.concatenate([imhp.to_free(rho), psi]))
    G_can = sgn * np.dot(qp, qp) * (sg + _qsym(_qconj(a), a)[0])
    res["omega_rescaled"] = max(sup(Om_can[1:] - Om_c), sup(Om_can[0]))
    res["metric_rescaled"] = sup(G_can - G_c)
    worst = max(res.values())
    return (worst, res) if detail else worst


def moment_lift_check(gh: GHData, rd: ReducedData, p, detail: bool = False):
    """mu^I = sign(U) q'bar nu^I q' with q' = |U|^{1/2} q, and mu^I = x^I is the GH moment map."""
    x, _ = gh.split(p)
    rho, q = imhp.project(x)
    pot = rd.potential(rho)
    nu = rho / pot
    qp = np.sqrt(abs(pot)) * q
    lifted = np.sign(pot) * imhp.embed(nu, qp)
    om = hk_forms(gh)(p)
    m = gh.m
    dmu = np.zeros((m, 3, gh.dim))
    for I in range(m):
        for k in range(3):
            dmu[I, k, 3 * I + k] = 1.0
    iota = np.stack([om[:, 3 * m + I, :] for I in range(m)])
    res = {"lift": sup(lifted - x), "hk_moment": sup(iota - dmu)}
    worst = max(res.values())
    return (worst, res) if detail else worst
