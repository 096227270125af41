"""Forward-mode dual numbers.

A ``Dual`` carries a value and a first-order perturbation.  Both parts may be
floats, complex numbers or further duals, so nesting gives exact second
derivatives.  Elementwise numpy ufuncs on object arrays dispatch to the
methods defined here (``sqrt``, ``exp``, ``log``, ``conjugate`` ...), which lets
plain numpy evaluators run on dual inputs without modification.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

__all__ = ["Dual", "derivative", "gradient", "hessian", "real_part", "imag_part"]


def _lift(v):
    return v if isinstance(v, Dual) else Dual(v, 0.0)


def _sqrt(v):
    if isinstance(v, Dual):
        return v.sqrt()
    if isinstance(v, complex):
        return complex(np.sqrt(v))
    return math.sqrt(v)


def _exp(v):
    if isinstance(v, Dual):
        return v.exp()
    return np.exp(v)


def _log(v):
    if isinstance(v, Dual):
        return v.log()
    return np.log(v)


def _sin(v):
    return v.sin() if isinstance(v, Dual) else np.sin(v)


def _cos(v):
    return v.cos() if isinstance(v, Dual) else np.cos(v)


def _conj(v):
    if isinstance(v, Dual):
        return v.conjugate()
    return np.conj(v)


def real_part(v):
    """Real part that also works for duals and object arrays."""
    if isinstance(v, Dual):
        return Dual(real_part(v.val), real_part(v.eps))
    if isinstance(v, np.ndarray) and v.dtype == object:
        return np.vectorize(real_part, otypes=[object])(v)
    return np.real(v)


def imag_part(v):
    if isinstance(v, Dual):
        return Dual(imag_part(v.val), imag_part(v.eps))
    if isinstance(v, np.ndarray) and v.dtype == object:
        return np.vectorize(imag_part, otypes=[object])(v)
    return np.imag(v)


class Dual:
    """Number val + eps * e with e^2 = 0."""

    __slots__ = ("val", "eps")
    __array_priority__ = 1000

    def __init__(self, val, eps=0.0):
        self.val = val
        self.eps = eps

    def __repr__(self) -> str:
        return f"Dual({self.val!r}, {self.eps!r})"

    def __add__(self, o):
        if isinstance(o, np.ndarray):
            return NotImplemented
        o = _lift(o)
        return Dual(self.val + o.val, self.eps + o.eps)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.val, -self.eps)

    def __pos__(self):
        return self

    def __sub__(self, o):
        if isinstance(o, np.ndarray):
            return NotImplemented
        o = _lift(o)
        return Dual(self.val - o.val, self.eps - o.eps)

    def __rsub__(self, o):
        return _lift(o) - self

    def __mul__(self, o):
        if isinstance(o, np.ndarray):
            return NotImplemented
        if isinstance(o, Dual):
            return Dual(self.val * o.val, self.val * o.eps + self.eps * o.val)
        return Dual(self.val * o, self.eps * o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, np.ndarray):
            return NotImplemented
        if isinstance(o, Dual):
            inv = 1.0 / o.val
            v = self.val * inv
            return Dual(v, (self.eps - v * o.eps) * inv)
        return Dual(self.val / o, self.eps / o)

    def __rtruediv__(self, o):
        inv = 1.0 / self.val
        v = o * inv
        return Dual(v, -v * self.eps * inv)

    def __pow__(self, p):
        if isinstance(p, Dual):
            return (self.log() * p).exp()
        if p == 0:
            return Dual(1.0, 0.0)
        if p == 1:
            return self
        if p == 2:
            return self * self
        return Dual(self.val ** p, p * self.val ** (p - 1) * self.eps)

    def __rpow__(self, b):
        return (self * np.log(b)).exp()

    def sqrt(self):
        r = _sqrt(self.val)
        return Dual(r, self.eps / (2.0 * r))

    def exp(self):
        e = _exp(self.val)
        return Dual(e, e * self.eps)

    def log(self):
        return Dual(_log(self.val), self.eps / self.val)

    def sin(self):
        return Dual(_sin(self.val), _cos(self.val) * self.eps)

    def cos(self):
        return Dual(_cos(self.val), -_sin(self.val) * self.eps)

    def conjugate(self):
        return Dual(_conj(self.val), _conj(self.eps))

    conj = conjugate

    def __abs__(self):
        if np.iscomplexobj(_scalar_value(self.val)):
            return (self * self.conjugate()).sqrt()
        if _scalar_value(self.val) < 0:
            return -self
        return self

    @property
    def real(self):
        return real_part(self)

    @property
    def imag(self):
        return imag_part(self)

    def _cmp(self):
        return _scalar_value(self)

    def __lt__(self, o):
        return self._cmp() < _scalar_value(o)

    def __gt__(self, o):
        return self._cmp() > _scalar_value(o)

    def __le__(self, o):
        return self._cmp() <= _scalar_value(o)

    def __ge__(self, o):
        return self._cmp() >= _scalar_value(o)


def _scalar_value(v):
    while isinstance(v, Dual):
        v = v.val
    return v


def _seed(x: np.ndarray, direction: np.ndarray) -> np.ndarray:
    out = np.empty(x.shape, dtype=object)
    for idx in np.ndindex(x.shape):
        out[idx] = Dual(x[idx], direction[idx])
    return out


def _eps(y):
    if isinstance(y, Dual):
        return y.eps
    if isinstance(y, np.ndarray) and y.dtype == object:
        return np.vectorize(lambda v: v.eps if isinstance(v, Dual) else 0.0, otypes=[object])(y)
    return np.zeros_like(np.asarray(y))


def _val(y):
    if isinstance(y, Dual):
        return y.val
    if isinstance(y, np.ndarray) and y.dtype == object:
        return np.vectorize(lambda v: v.val if isinstance(v, Dual) else v, otypes=[object])(y)
    return y


def _to_numeric(y):
    y = np.asarray(y)
    if y.dtype == object:
        y = y.astype(complex)
        if np.all(y.imag == 0):
            return y.real
    return y


def derivative(f: Callable, x, direction) -> np.ndarray:
    """Directional derivative of f at x along ``direction`` by one dual pass."""
    x = np.asarray(x)
    y = f(_seed(x, np.asarray(direction, dtype=float)))
    return _to_numeric(_eps(y))


def gradient(f: Callable, x) -> np.ndarray:
    """Array of partials; leading axis indexes the coordinate of x (flattened)."""
    x = np.asarray(x, dtype=float)
    out = []
    for k in range(x.size):
        e = np.zeros(x.size)
        e[k] = 1.0
        out.append(derivative(f, x, e.reshape(x.shape)))
    return np.stack(out)


def hessian(f: Callable, x) -> np.ndarray:
    """Exact second partials by nested duals; leading two axes are coordinates."""
    x = np.asarray(x, dtype=float)
    n = x.size
    out = np.empty((n, n) + np.shape(f(x)), dtype=complex)
    for a in range(n):
        for b in range(a, n):
            ea = np.zeros(n)
            eb = np.zeros(n)
            ea[a] = 1.0
            eb[b] = 1.0
            xx = np.empty(n, dtype=object)
            for k in range(n):
                xx[k] = Dual(Dual(x.flat[k], eb[k]), Dual(ea[k], 0.0))
            y = f(xx.reshape(x.shape))
            inner = _eps(y)
            val = _to_numeric(_eps(inner) if not isinstance(inner, Dual) else inner.eps)
            out[a, b] = val
            out[b, a] = val
    if np.all(out.imag == 0):
        return out.real
    return out
