"""Quaternion algebra, the SO(3) adjoint representation and Cartan-Maurer forms.

Components are stored in (w, x, y, z) order along the basis u_0 = 1, u_1 = i,
u_2 = j, u_3 = k.  The array-level kernels (``qmul``, ``qconj`` ...) act on the
last axis of length 4 and use only ring operations, so they also accept object
arrays of dual numbers.

Conventions
-----------
* ``adjoint(q)`` is the 4x4 matrix with q^-1 u_a q = R_ab(q) u_b, hence
  R(pq) = R(p) R(q).
* ``sandwich(q, v)`` is q-bar v q, which equals |q|^2 R(q)^T v on R^3.
* Cartan-Maurer forms are sigma_L = q^-1 dq and sigma_R = q dq^-1.
* The Z2 representative of {q, -q} has its first nonzero component positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Quaternion",
    "ImQuaternion",
    "qmul",
    "qconj",
    "qnorm2",
    "qinv",
    "qdot",
    "cross",
    "dot",
    "adjoint",
    "adjoint_arr",
    "sandwich",
    "sandwich_arr",
    "cartan_maurer",
    "cartan_maurer_arr",
    "z2_representative",
    "left_matrix",
    "right_matrix",
    "EPS3",
]

EPS3 = np.zeros((3, 3, 3))
EPS3[0, 1, 2] = EPS3[1, 2, 0] = EPS3[2, 0, 1] = 1.0
EPS3[0, 2, 1] = EPS3[2, 1, 0] = EPS3[1, 0, 2] = -1.0


def qmul(a, b):
    """Hamilton product of quaternion arrays (last axis = (w, x, y, z))."""
    a = np.asarray(a)
    b = np.asarray(b)
    aw, ax, ay, az = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    bw, bx, by, bz = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def qconj(a):
    a = np.asarray(a)
    return np.concatenate([a[..., :1], -a[..., 1:]], axis=-1)


def qnorm2(a):
    a = np.asarray(a)
    return a[..., 0] * a[..., 0] + a[..., 1] * a[..., 1] + a[..., 2] * a[..., 2] + a[..., 3] * a[..., 3]


def qdot(a, b):
    """Euclidean inner product <a, b> on R^4."""
    a = np.asarray(a)
    b = np.asarray(b)
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2] + a[..., 3] * b[..., 3]


def qinv(a):
    n2 = qnorm2(a)
    if np.any(np.asarray(n2 == 0, dtype=bool)):
        raise ZeroDivisionError("inverse of the zero quaternion")
    return qconj(a) / np.asarray(n2)[..., None]


def cross(a, b):
    """Cross product on the last axis; works for object arrays."""
    a = np.asarray(a)
    b = np.asarray(b)
    return np.stack(
        [
            a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1],
            a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2],
            a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0],
        ],
        axis=-1,
    )


def dot(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def _as_quat(v):
    v = np.asarray(v)
    if v.shape[-1] == 3:
        z = np.zeros(v.shape[:-1] + (1,), dtype=v.dtype)
        return np.concatenate([z, v], axis=-1)
    return v


def _basis():
    return np.eye(4)


def adjoint_arr(q) -> np.ndarray:
    """Rows are the components of q^-1 u_a q."""
    q = np.asarray(q, dtype=float)
    if qnorm2(q) == 0:
        raise ValueError("adjoint of the zero quaternion is undefined")
    qi = qinv(q)
    return np.stack([qmul(qmul(qi, u), q) for u in _basis()])


def sandwich_arr(q, v):
    """q-bar v q for an imaginary quaternion (or R^3 vector) v."""
    qv = qmul(qmul(qconj(q), _as_quat(v)), q)
    return qv[..., 1:]


def cartan_maurer_arr(q, dq):
    """Return (sigma_L, sigma_R) = (q^-1 dq, -dq q^-1) as 4-arrays."""
    q = np.asarray(q)
    if np.all(np.asarray(qnorm2(q) == 0, dtype=bool)):
        raise ValueError("Cartan-Maurer forms undefined at q = 0")
    qi = qinv(q)
    return qmul(qi, dq), -qmul(dq, qi)


def left_matrix(q) -> np.ndarray:
    """Matrix of p -> q p on R^4."""
    return np.stack([qmul(q, u) for u in _basis()], axis=-1)


def right_matrix(q) -> np.ndarray:
    """Matrix of p -> p q on R^4."""
    return np.stack([qmul(u, q) for u in _basis()], axis=-1)


def z2_representative(q) -> np.ndarray:
    """Pick the element of {q, -q} whose first nonzero component is positive."""
    q = np.asarray(q, dtype=float)
    for c in q:
        if c != 0:
            return q if c > 0 else -q
    return q


@dataclass(frozen=True)
class ImQuaternion:
    """Imaginary quaternion, doubling as a vector in R^3."""

    x: float
    y: float
    z: float

    @classmethod
    def from_array(cls, a) -> "ImQuaternion":
        a = np.asarray(a, dtype=float)
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def to_quaternion(self) -> "Quaternion":
        return Quaternion(0.0, self.x, self.y, self.z)

    def cross(self, other: "ImQuaternion") -> "ImQuaternion":
        return ImQuaternion.from_array(cross(self.to_array(), other.to_array()))

    def dot(self, other: "ImQuaternion") -> float:
        return float(dot(self.to_array(), other.to_array()))

    def norm(self) -> float:
        return float(np.linalg.norm(self.to_array()))

    def __add__(self, other):
        return ImQuaternion.from_array(self.to_array() + other.to_array())

    def __sub__(self, other):
        return ImQuaternion.from_array(self.to_array() - other.to_array())

    def __mul__(self, s: float):
        return ImQuaternion.from_array(self.to_array() * s)

    __rmul__ = __mul__


@dataclass(frozen=True)
class Quaternion:
    """Quaternion w + x i + y j + z k."""

    w: float
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @classmethod
    def from_array(cls, a) -> "Quaternion":
        a = np.asarray(a, dtype=float)
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))

    def to_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    @property
    def real(self) -> float:
        return self.w

    @property
    def imag(self) -> ImQuaternion:
        return ImQuaternion(self.x, self.y, self.z)

    def conj(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def norm2(self) -> float:
        return float(qnorm2(self.to_array()))

    def norm(self) -> float:
        return float(np.sqrt(self.norm2()))

    def inverse(self) -> "Quaternion":
        return Quaternion.from_array(qinv(self.to_array()))

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return Quaternion.from_array(qmul(self.to_array(), other.to_array()))
        return Quaternion.from_array(self.to_array() * float(other))

    def __rmul__(self, s):
        return Quaternion.from_array(self.to_array() * float(s))

    def __add__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion.from_array(self.to_array() + other.to_array())

    def __sub__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion.from_array(self.to_array() - other.to_array())

    def __neg__(self) -> "Quaternion":
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def isclose(self, other: "Quaternion", atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.to_array(), other.to_array(), atol=atol, rtol=0))


def _arr(q) -> np.ndarray:
    if isinstance(q, (Quaternion,)):
        return q.to_array()
    if isinstance(q, ImQuaternion):
        return q.to_quaternion().to_array()
    return np.asarray(q, dtype=float)


def adjoint(q) -> np.ndarray:
    """4x4 adjoint matrix R_ab(q) defined by q^-1 u_a q = R_ab(q) u_b."""
    return adjoint_arr(_arr(q))


def sandwich(q, v) -> ImQuaternion:
    """Return q-bar v q as an imaginary quaternion."""
    vv = v.to_array() if isinstance(v, ImQuaternion) else np.asarray(v, dtype=float)
    return ImQuaternion.from_array(sandwich_arr(_arr(q), vv))


def cartan_maurer(q, dq) -> tuple[Quaternion, Quaternion]:
    """Left and right Cartan-Maurer forms evaluated on the increment dq."""
    sl, sr = cartan_maurer_arr(_arr(q), _arr(dq))
    return Quaternion.from_array(sl), Quaternion.from_array(sr)
