"""Extended Gibbons-Hawking hyperkaehler construction.

Chart layout on the 4m-dimensional total space: the first 3m coordinates are
x^I_i (row-major, I outer), the last m are the fiber coordinates psi_I.

Conventions
-----------
* (dx^I ^ dx^J)_k = eps_kij dx^I_i ^ dx^J_j.
* Omega_k = -1/2 U_IJ (dx^I ^ dx^J)_k - dx^I_k ^ (dpsi_I + A_I).
* G = 1/2 U_IJ dx^I . dx^J + 1/2 U^IJ (dpsi_I + A_I)(dpsi_J + A_J), where the
  symmetric product is a b = a (x) b + b (x) a, the partner of the wedge
  a ^ b = a (x) b - b (x) a.  MetricField stores the bilinear form G(X, Y), so
  G(d/dpsi_I, d/dpsi_J) = U^IJ.
* With first-slot contraction, i_{d/dpsi_K} Omega_k = +dx^K_k, so the
  moment map of d/dpsi_K is x^K.
* The metric rebuilt from the triple as g = -Omega_1 I_1 with
  I_1 = Omega_3^-1 Omega_2 equals G.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .excalc import DEFAULT_SCHEME, DerivScheme, KForm, MetricField, d, partials, sup
from .quatmath import EPS3, qconj, qmul

__all__ = [
    "GHData",
    "HKTriple",
    "QCoframe",
    "bogomolny1_residual",
    "bogomolny2_residual",
    "field_strength",
    "star_dU",
    "hk_forms",
    "hk_metric",
    "coframe",
    "quat_forms_check",
    "algebraic_check",
    "closure_check",
    "complex_structures",
    "monopole_data",
    "flat_data",
    "dirac_monopole_connection",
    "line_data",
    "three_center_data",
    "two_center_data",
    "skewed_data",
    "SingularHiggsError",
]

_QUAT_TABLE = np.stack([qmul(qconj(np.eye(4)[a]), np.eye(4)) for a in range(4)])  # [a, b, c]


class SingularHiggsError(np.linalg.LinAlgError):
    pass


@dataclass
class GHData:
    """Higgs field and connection on the base R^m (x) R^3.

    ``higgs(x)`` returns the symmetric m x m matrix U_IJ at x of shape (m, 3);
    ``conn(x)`` returns A of shape (m, m, 3) with A_I = A[I, J, j] dx^J_j.
    """

    m: int
    higgs: Callable[[np.ndarray], np.ndarray]
    conn: Callable[[np.ndarray], np.ndarray]
    scheme: DerivScheme = field(default=DEFAULT_SCHEME)
    name: str = "custom"

    @property
    def dim(self) -> int:
        return 4 * self.m

    def split(self, p) -> tuple[np.ndarray, np.ndarray]:
        p = np.asarray(p, dtype=float)
        return p[: 3 * self.m].reshape(self.m, 3), p[3 * self.m :]

    def point(self, x, psi=None) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(self.m, 3)
        psi = np.zeros(self.m) if psi is None else np.asarray(psi, dtype=float)
        return np.concatenate([x.ravel(), psi])

    def U(self, x) -> np.ndarray:
        return np.asarray(self.higgs(np.asarray(x, dtype=float).reshape(self.m, 3)), dtype=float)

    def A(self, x) -> np.ndarray:
        return np.asarray(self.conn(np.asarray(x, dtype=float).reshape(self.m, 3)), dtype=float)

    def B(self, p) -> np.ndarray:
        """Rows are dpsi_I + A_I as covectors on the full chart."""
        x, _ = self.split(p)
        m = self.m
        out = np.zeros((m, 4 * m))
        out[:, : 3 * m] = self.A(x).reshape(m, 3 * m)
        out[:, 3 * m :] = np.eye(m)
        return out

    def Uinv(self, x) -> np.ndarray:
        U = self.U(x)
        cond = np.linalg.cond(U)
        if not np.isfinite(cond) or cond > 1e14:
            raise SingularHiggsError(f"Higgs field singular (condition number {cond:.3e})")
        return np.linalg.inv(U)


@dataclass
class HKTriple:
    """Omega_1, Omega_2, Omega_3 held as one vector-valued 2-form."""

    forms: KForm

    def __call__(self, p) -> np.ndarray:
        return self.forms(p)

    def __getitem__(self, i) -> KForm:
        return self.forms.component(i)


@dataclass
class QCoframe:
    """H^I as a 1-form with values in (m, 4): quaternion components of each H^I."""

    forms: KForm

    def __call__(self, p) -> np.ndarray:
        return self.forms(p)


def _base_partials(gh: GHData, fn, x) -> np.ndarray:
    """Partials of fn(x) in the 3m base coordinates, shape (m, 3, ...)."""
    flat = lambda y: fn(y.reshape(gh.m, 3))
    g = partials(flat, np.asarray(x, dtype=float).ravel(), gh.scheme)
    return g.reshape((gh.m, 3) + g.shape[1:])


def bogomolny1_residual(gh: GHData, x) -> float:
    """max |d_{Ii} U_KJ - d_{Ji} U_KI|."""
    dU = _base_partials(gh, gh.U, x)  # [I, i, K, J]
    return sup(dU - np.einsum("JaKI->IaKJ", dU))


def star_dU(gh: GHData, x) -> np.ndarray:
    """Tensor of *^I dU_KI on the base; shape (m, 3m, 3m)."""
    m = gh.m
    dU = _base_partials(gh, gh.U, x)  # [J, k, K, I]
    # 1/2 dJk U_KI eps_kab (e_Ia e_Jb - e_Jb e_Ia)
    t = 0.5 * np.einsum("JkKI,kab->KIaJb", dU, EPS3)
    t = t.reshape(m, 3 * m, 3 * m)
    return t - np.transpose(t, (0, 2, 1))


def field_strength(gh: GHData, x) -> np.ndarray:
    """dA_K on the base; shape (m, 3m, 3m)."""
    m = gh.m
    dA = _base_partials(gh, gh.A, x).reshape(3 * m, m, 3 * m)  # [mu, K, nu] = d_mu A_K,nu
    t = np.transpose(dA, (1, 0, 2))
    return t - np.transpose(t, (0, 2, 1))


def bogomolny2_residual(gh: GHData, x) -> float:
    """Sup norm of dA_K - *^I dU_KI."""
    return sup(field_strength(gh, x) - star_dU(gh, x))


def _omega_fn(gh: GHData):
    m = gh.m

    def fn(p):
        x, _ = gh.split(p)
        U = gh.U(x)
        B = gh.B(p)
        out = np.zeros((3, 4 * m, 4 * m))
        # -1/2 U_IJ eps_kij (e_Ii e_Jj - e_Jj e_Ii) = -U_IJ eps_kij e_Ii e_Jj
        blk = -np.einsum("IJ,kij->kIiJj", U, EPS3).reshape(3, 3 * m, 3 * m)
        out[:, : 3 * m, : 3 * m] = blk
        for k in range(3):
            ex = np.zeros((m, 4 * m))
            ex[np.arange(m), 3 * np.arange(m) + k] = 1.0
            t = ex.T @ B
            out[k] -= t - t.T
        return out

    return fn


def hk_forms(gh: GHData) -> HKTriple:
    return HKTriple(KForm(2, gh.dim, _omega_fn(gh), (3,)))


def hk_metric(gh: GHData) -> MetricField:
    m = gh.m

    def fn(p):
        x, _ = gh.split(p)
        U = gh.U(x)
        Ui = gh.Uinv(x)
        B = gh.B(p)
        G = B.T @ Ui @ B
        G[: 3 * m, : 3 * m] += np.kron(U, np.eye(3))
        return G

    return MetricField(gh.dim, fn)


def coframe(gh: GHData) -> QCoframe:
    m = gh.m

    def fn(p):
        x, _ = gh.split(p)
        Ui = gh.Uinv(x)
        B = gh.B(p)
        H = np.zeros((m, 4, 4 * m))
        H[:, 0, :] = Ui @ B
        for I in range(m):
            for i in range(3):
                H[I, 1 + i, 3 * I + i] = 1.0
        return H

    return QCoframe(KForm(1, gh.dim, fn, (m, 4)))


def quaternionic_products(U: np.ndarray, H: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (1/2 U_IJ Hbar^I ^ H^J, 1/2 U_IJ Hbar^I H^J) as quaternion-valued tensors.

    H has shape (m, 4, dim).  Outputs have shape (4, dim, dim); the wedge is
    antisymmetric in the form slots and the product symmetric.
    """
    t = 0.5 * np.einsum("IJ,abc,Iam,Jbn->cmn", U, _QUAT_TABLE, H, H)
    return t - np.transpose(t, (0, 2, 1)), t + np.transpose(t, (0, 2, 1))


def quat_forms_check(gh: GHData, p) -> float:
    """Sup deviation of the quaternionic coframe formulas from Omega and G."""
    x, _ = gh.split(p)
    H = coframe(gh)(p)
    wq, gq = quaternionic_products(gh.U(x), H)
    om = hk_forms(gh)(p)
    G = hk_metric(gh)(p)
    return max(sup(wq[1:] - om), sup(wq[0]), sup(gq[0] - G), sup(gq[1:]))


def complex_structures(om: np.ndarray) -> np.ndarray:
    """I_1 = O3^-1 O2, I_2 = O1^-1 O3, I_3 = O2^-1 O1 from the 2-form matrices."""
    inv = []
    for k in range(3):
        c = np.linalg.cond(om[k])
        if not np.isfinite(c) or c > 1e13:
            raise np.linalg.LinAlgError(f"2-form {k + 1} degenerate (condition {c:.3e})")
        inv.append(np.linalg.inv(om[k]))
    return np.stack([inv[2] @ om[1], inv[0] @ om[2], inv[1] @ om[0]])


def algebraic_check(t, g, p, detail: bool = False):
    """Quaternionic-algebra residual of a triple of 2-forms at p.

    Returns the max of |I_i^2 + 1|, |I_1 I_2 I_3 + 1|, the spread and asymmetry
    of the three rebuilt metrics -Omega_i I_i, and (when g is given) their
    deviation from g.
    """
    om = np.asarray(t(p) if callable(t) else t)
    Is = complex_structures(om)
    n = om.shape[-1]
    one = np.eye(n)
    res = {
        "square": max(sup(Is[k] @ Is[k] + one) for k in range(3)),
        "triple": sup(Is[0] @ Is[1] @ Is[2] + one),
    }
    gs = [-om[k] @ Is[k] for k in range(3)]
    res["metric_spread"] = max(sup(gs[0] - gs[1]), sup(gs[1] - gs[2]))
    res["metric_symmetry"] = max(sup(gk - gk.T) for gk in gs)
    if g is not None:
        gm = np.asarray(g(p) if callable(g) else g)
        res["metric_match"] = sup(gs[0] - gm)
    worst = max(res.values())
    return (worst, res) if detail else worst


def closure_check(t, p, scheme: DerivScheme = DEFAULT_SCHEME) -> float:
    forms = t.forms if isinstance(t, HKTriple) else t
    return sup(d(forms, scheme)(p))


# ---------------------------------------------------------------- built-ins


def flat_data(m: int = 1, value: float = 0.5) -> GHData:
    U = value * np.eye(m)
    return GHData(m, lambda x: U, lambda x: np.zeros((m, m, 3)), name="flat")


def dirac_monopole_connection(x) -> np.ndarray:
    """A = -1/2 (x dy - y dx) / (r (r + z)); dA = *d(1/(2r)), string on the negative z axis."""
    x = np.asarray(x, dtype=float).reshape(3)
    r = np.sqrt(x @ x)
    c = -0.5 / (r * (r + x[2]))
    return np.array([-x[1] * c, x[0] * c, 0.0])


def monopole_data() -> GHData:
    """m = 1, U = 1/(2|x|) with the Dirac monopole connection."""

    def higgs(x):
        return np.array([[0.5 / np.linalg.norm(x[0])]])

    def conn(x):
        return dirac_monopole_connection(x[0]).reshape(1, 1, 3)

    return GHData(1, higgs, conn, name="monopole")


def line_data(
    vectors,
    weights=None,
    centers=None,
    constant=None,
    name: str = "lines",
) -> GHData:
    """Superposition of monopoles along linear combinations y_k = v_k^J x^J - a_k.

    U_IJ = C_IJ + sum_k w_k v_kI v_kJ / (2 |y_k|) and
    A_I = sum_k w_k v_kI A_Dirac(y_k), which solves both Bogomolny equations.
    """
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    n, m = V.shape
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    a = np.zeros((n, 3)) if centers is None else np.asarray(centers, dtype=float).reshape(n, 3)
    C = np.zeros((m, m)) if constant is None else np.asarray(constant, dtype=float)

    def ys(x):
        return V @ x - a

    def higgs(x):
        y = ys(x)
        r = np.sqrt(np.einsum("ka,ka->k", y, y))
        return C + np.einsum("k,kI,kJ->IJ", w / (2.0 * r), V, V)

    def conn(x):
        y = ys(x)
        Ad = np.stack([dirac_monopole_connection(yk) for yk in y])
        return np.einsum("k,kI,kJ,kj->IJj", w, V, V, Ad)

    return GHData(m, higgs, conn, name=name)


def three_center_data() -> GHData:
    """Higgs field 1/4 d_I.d_J of 2(|x0| + |x1| + |x0 + x1|)."""
    return line_data([[1, 0], [0, 1], [1, 1]], weights=[2, 2, 2], name="three-center")


def two_center_data() -> GHData:
    """U_IJ = diag(1/(2|x0|), 1/(2|x1|)) with Dirac monopoles in each factor."""
    return line_data([[1, 0], [0, 1]], name="two-center")


def skewed_data() -> GHData:
    """A Bogomolny solution with no rotation or scaling symmetry."""
    return line_data(
        [[1.0, 0.3], [0.2, 1.0]],
        weights=[1.0, 1.5],
        centers=[[0.3, -0.2, 0.1], [-0.1, 0.4, 0.2]],
        constant=[[1.0, 0.2], [0.2, 0.8]],
        name="skewed",
    )
