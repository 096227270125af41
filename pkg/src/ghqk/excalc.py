"""Pointwise exterior calculus on coordinate charts.

Forms are closures over points.  A k-form evaluator returns the full
antisymmetric component tensor ``w[m1, ..., mk] = w(d_m1, ..., d_mk)``, so that
w = sum over sorted tuples of w[tuple] dx^tuple.  A form may be vector valued:
leading axes of the evaluator output (``vshape``) index the value, trailing
axes are form slots.  This lets a triple of 2-forms share one evaluator.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import dual as _dual

__all__ = [
    "Chart",
    "DerivScheme",
    "KForm",
    "VectorField",
    "MetricField",
    "ZeroTopForm",
    "partials",
    "alt",
    "d",
    "wedge",
    "interior",
    "lie_form",
    "lie_metric",
    "bracket",
    "coordinate_vector",
    "coordinate_form",
    "function_form",
    "sup",
]

CENTRAL = "central-difference"
ANALYTIC = "analytic"
DUAL = "dual-number"


@dataclass(frozen=True)
class Chart:
    names: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise ValueError("coordinate names must be unique")

    @property
    def dim(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        return self.names.index(name)


@dataclass(frozen=True)
class DerivScheme:
    """How partial derivatives of black-box evaluators are taken."""

    mode: str = CENTRAL
    h: float = 1e-5
    order: int = 2

    def __post_init__(self):
        if self.mode not in (CENTRAL, ANALYTIC, DUAL):
            raise ValueError(f"unknown derivative mode {self.mode!r}")
        if self.mode == CENTRAL and not self.h > 0:
            raise ValueError("step h must be positive")
        if self.order not in (2, 4):
            raise ValueError("central stencil order must be 2 or 4")

    def nested(self, h: float = 3e-3) -> "DerivScheme":
        """Scheme for an outer derivative of a function that is itself differenced."""
        if self.mode == DUAL:
            return self
        return DerivScheme(self.mode, max(self.h, h), 4)


DEFAULT_SCHEME = DerivScheme()


def partials(fn: Callable, p, scheme: DerivScheme = DEFAULT_SCHEME) -> np.ndarray:
    """All first partials of ``fn`` at ``p``; axis 0 is the coordinate index.

    Central differences use the step h * max(1, |p_m|) in direction m, with the
    two-point stencil or, for ``order=4``, the five-point stencil.
    """
    p = np.asarray(p, dtype=float)
    if scheme.mode == DUAL:
        return _dual.gradient(fn, p)
    out = []
    for m in range(p.size):
        step = scheme.h * max(1.0, abs(p[m]))
        e = np.zeros_like(p)
        e[m] = step
        g = (np.asarray(fn(p + e)) - np.asarray(fn(p - e))) / (2.0 * step)
        if scheme.order == 4:
            g2 = (np.asarray(fn(p + 2 * e)) - np.asarray(fn(p - 2 * e))) / (4.0 * step)
            g = (4.0 * g - g2) / 3.0
        out.append(g)
    return np.stack(out)


def _perm_sign(perm: Sequence[int]) -> int:
    sign = 1
    perm = list(perm)
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def alt(t: np.ndarray, k: int) -> np.ndarray:
    """Antisymmetrize the trailing k axes (with the 1/k! normalization)."""
    if k <= 1:
        return t
    lead = t.ndim - k
    out = np.zeros_like(t)
    for perm in itertools.permutations(range(k)):
        axes = list(range(lead)) + [lead + q for q in perm]
        out = out + _perm_sign(perm) * np.transpose(t, axes)
    return out / math.factorial(k)


class ZeroTopForm:
    """Marker returned by d on a top-degree form."""

    degree = None

    def __init__(self, dim: int):
        self.dim = dim
        self.degree = dim + 1

    def __call__(self, p):
        return np.zeros(())


@dataclass
class KForm:
    """Pointwise-evaluable (possibly vector valued) differential k-form."""

    degree: int
    dim: int
    fn: Callable[[np.ndarray], np.ndarray]
    vshape: tuple[int, ...] = ()
    dfn: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    def __call__(self, p) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(p, dtype=float)))

    def coeff(self, p, idx: Sequence[int]) -> np.ndarray:
        """Coefficient on dx^idx for a strictly increasing index tuple."""
        idx = tuple(idx)
        if len(idx) != self.degree or any(a >= b for a, b in zip(idx, idx[1:])):
            raise ValueError("index tuple must be strictly increasing with length = degree")
        return self(p)[(Ellipsis,) + idx]

    def component(self, i) -> "KForm":
        """Scalar component of a vector-valued form."""
        return KForm(self.degree, self.dim, lambda p: self.fn(p)[i], ())

    def __add__(self, other: "KForm") -> "KForm":
        _check_same(self, other)
        return KForm(self.degree, self.dim, lambda p: self.fn(p) + other.fn(p), self.vshape)

    def __sub__(self, other: "KForm") -> "KForm":
        _check_same(self, other)
        return KForm(self.degree, self.dim, lambda p: self.fn(p) - other.fn(p), self.vshape)

    def __neg__(self) -> "KForm":
        return KForm(self.degree, self.dim, lambda p: -self.fn(p), self.vshape)

    def scale(self, c: float) -> "KForm":
        return KForm(self.degree, self.dim, lambda p: c * self.fn(p), self.vshape)


def _check_same(a: KForm, b: KForm) -> None:
    if a.degree != b.degree or a.dim != b.dim:
        raise ValueError("forms must share degree and dimension")


@dataclass
class VectorField:
    dim: int
    fn: Callable[[np.ndarray], np.ndarray]

    def __call__(self, p) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(p, dtype=float)))

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.dim, lambda p: self.fn(p) + other.fn(p))

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.dim, lambda p: self.fn(p) - other.fn(p))

    def scale(self, c: float) -> "VectorField":
        return VectorField(self.dim, lambda p: c * self.fn(p))

    def apply(self, f: Callable, p, scheme: DerivScheme = DEFAULT_SCHEME) -> np.ndarray:
        """Directional derivative X(f) of a (possibly array valued) function."""
        grad = partials(f, p, scheme)
        return np.tensordot(self(p), grad, axes=(0, 0))


@dataclass
class MetricField:
    dim: int
    fn: Callable[[np.ndarray], np.ndarray]

    def __call__(self, p) -> np.ndarray:
        g = np.asarray(self.fn(np.asarray(p, dtype=float)))
        return 0.5 * (g + g.T)

    def check_nondegenerate(self, p, tol: float = 1e-12) -> float:
        """Return the smallest |eigenvalue| relative to the largest; raise if degenerate."""
        ev = np.abs(np.linalg.eigvalsh(self(p)))
        ratio = ev.min() / ev.max()
        if ratio < tol:
            raise np.linalg.LinAlgError(f"metric degenerate (eigenvalue ratio {ratio:.3e})")
        return float(ratio)


def coordinate_vector(dim: int, m: int) -> VectorField:
    e = np.zeros(dim)
    e[m] = 1.0
    return VectorField(dim, lambda p: e)


def coordinate_form(dim: int, m: int) -> KForm:
    e = np.zeros(dim)
    e[m] = 1.0
    return KForm(1, dim, lambda p: e)


def function_form(dim: int, f: Callable, vshape: tuple[int, ...] = ()) -> KForm:
    return KForm(0, dim, f, vshape)


def d(w: KForm, scheme: DerivScheme = DEFAULT_SCHEME) -> KForm:
    """Exterior derivative.  (dw)_{m0..mk} = sum_j (-1)^j d_{mj} w_{..mj-hat..}."""
    if w.degree >= w.dim:
        return ZeroTopForm(w.dim)
    k = w.degree
    nv = len(w.vshape)

    if scheme.mode == ANALYTIC and w.dfn is not None:
        return KForm(k + 1, w.dim, w.dfn, w.vshape)

    def fn(p):
        g = partials(w.fn, p, scheme)
        g = np.moveaxis(g, 0, nv)
        return (k + 1) * alt(g, k + 1)

    return KForm(k + 1, w.dim, fn, w.vshape)


def wedge(a: KForm, b: KForm) -> KForm:
    """Wedge product; vector values multiply as an outer product of value axes."""
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    p_, q_ = a.degree, b.degree
    if p_ + q_ > a.dim:
        raise ValueError("degree exceeds dimension")
    coef = math.factorial(p_ + q_) / (math.factorial(p_) * math.factorial(q_))
    na, nb = len(a.vshape), len(b.vshape)

    def fn(p):
        x = a.fn(p)
        y = b.fn(p)
        t = np.tensordot(x, y, axes=0) if (na or nb or p_ or q_) else x * y
        # order axes: va, vb, form-a, form-b
        axes = (
            list(range(na))
            + list(range(na + p_, na + p_ + nb))
            + list(range(na, na + p_))
            + list(range(na + p_ + nb, na + p_ + nb + q_))
        )
        t = np.transpose(t, axes)
        return coef * alt(t, p_ + q_)

    return KForm(p_ + q_, a.dim, fn, a.vshape + b.vshape)


def interior(X: VectorField, w: KForm) -> KForm:
    """Contraction of X into the first slot of w."""
    if w.degree == 0:
        raise ValueError("cannot contract a vector field into a 0-form")
    nv = len(w.vshape)

    def fn(p):
        t = np.moveaxis(w.fn(p), nv, -1)
        return t @ X(p)

    return KForm(w.degree - 1, w.dim, fn, w.vshape)


def lie_form(X: VectorField, w: KForm, scheme: DerivScheme = DEFAULT_SCHEME) -> KForm:
    """Lie derivative by the Cartan formula i_X d + d i_X."""
    if w.degree == 0:

        def fn0(p):
            g = partials(w.fn, p, scheme)
            return np.tensordot(X(p), g, axes=(0, 0))

        return KForm(0, w.dim, fn0, w.vshape)
    first = interior(X, d(w, scheme)) if w.degree < w.dim else None
    second = d(interior(X, w), scheme)
    if first is None:
        return second
    return first + second


def lie_metric(X: VectorField, g: MetricField, scheme: DerivScheme = DEFAULT_SCHEME) -> MetricField:
    """(L_X g)_mn = X^l d_l g_mn + g_ln d_m X^l + g_ml d_n X^l."""

    def fn(p):
        dg = partials(g, p, scheme)
        dx = partials(X, p, scheme)  # dx[m, l] = d_m X^l
        gp = g(p)
        return np.tensordot(X(p), dg, axes=(0, 0)) + dx @ gp + gp @ dx.T

    return MetricField(g.dim, fn)


def bracket(X: VectorField, Y: VectorField, scheme: DerivScheme = DEFAULT_SCHEME) -> VectorField:
    """[X, Y]^m = X^n d_n Y^m - Y^n d_n X^m."""

    def fn(p):
        dy = partials(Y, p, scheme)
        dx = partials(X, p, scheme)
        return X(p) @ dy - Y(p) @ dx

    return VectorField(X.dim, fn)


def sup(a) -> float:
    """Sup norm of an array (0 for empty)."""
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0
