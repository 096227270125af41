"""Quaternion kernel: products, adjoint representation, sandwich action and Cartan-Maurer forms."""

import numpy as np
import pytest

from ghqk.quatmath import (
    EPS3,
    ImQuaternion,
    Quaternion,
    adjoint,
    adjoint_arr,
    cartan_maurer_arr,
    cross,
    left_matrix,
    qconj,
    qinv,
    qmul,
    qnorm2,
    right_matrix,
    sandwich,
    sandwich_arr,
    z2_representative,
)


class TestAlgebra:
    """Hamilton products in (w, x, y, z) order."""

    def test_unit_table(self):
        i, j, k = (Quaternion(0, 1), Quaternion(0, 0, 1), Quaternion(0, 0, 0, 1))
        assert (i * j).isclose(k)
        assert (j * k).isclose(i)
        assert (k * i).isclose(j)
        assert (i * i).isclose(Quaternion(-1.0))
        assert (i * j * k).isclose(Quaternion(-1.0))

    def test_associative_and_norm_multiplicative(self, rng):
        a, b, c = rng.normal(size=(3, 500, 4))
        assert np.abs(qmul(qmul(a, b), c) - qmul(a, qmul(b, c))).max() < 1e-12
        assert np.abs(qnorm2(qmul(a, b)) - qnorm2(a) * qnorm2(b)).max() < 1e-10

    def test_inverse_and_conjugate(self, rng):
        a = rng.normal(size=(100, 4))
        one = np.zeros(4)
        one[0] = 1.0
        assert np.abs(qmul(a, qinv(a)) - one).max() < 1e-12
        b = rng.normal(size=(100, 4))
        assert np.abs(qconj(qmul(a, b)) - qmul(qconj(b), qconj(a))).max() < 1e-12

    def test_left_right_matrices(self, rng):
        a, b = rng.normal(size=(2, 4))
        assert np.allclose(left_matrix(a) @ b, qmul(a, b))
        assert np.allclose(right_matrix(b) @ a, qmul(a, b))

    def test_imaginary_product_is_cross_minus_dot(self, rng):
        u, v = rng.normal(size=(2, 3))
        prod = qmul(np.r_[0.0, u], np.r_[0.0, v])
        assert np.isclose(prod[0], -u @ v)
        assert np.allclose(prod[1:], cross(u, v))
        assert np.isclose(EPS3[0, 1, 2], 1.0) and np.isclose(EPS3[1, 0, 2], -1.0)


class TestAdjoint:
    """R(q) with q^-1 u_a q = R_ab u_b."""

    def test_homomorphism_and_orthogonality(self, rng):
        for _ in range(200):
            p, q = rng.normal(size=(2, 4))
            Rp, Rq = adjoint_arr(p), adjoint_arr(q)
            assert np.abs(adjoint_arr(qmul(p, q)) - Rp @ Rq).max() < 1e-12
            assert np.abs(Rq @ Rq.T - np.eye(4)).max() < 1e-12
            assert np.isclose(np.linalg.det(Rq[1:, 1:]), 1.0)

    def test_defining_relation(self, rng):
        q = rng.normal(size=4)
        R = adjoint(q)
        for a in range(4):
            lhs = qmul(qmul(qinv(q), np.eye(4)[a]), q)
            assert np.allclose(lhs, R[a])

    def test_sandwich_equals_scaled_transpose(self, rng):
        q, v = rng.normal(size=4), rng.normal(size=3)
        R = adjoint_arr(q)[1:, 1:]
        assert np.allclose(sandwich_arr(q, v), qnorm2(q) * R.T @ v)
        s = sandwich(Quaternion.from_array(q), ImQuaternion(*v))
        assert np.isclose(s.norm(), qnorm2(q) * np.linalg.norm(v))

    def test_quarter_turn_example(self):
        q = np.array([np.cos(np.pi / 4), 0.0, 0.0, np.sin(np.pi / 4)])
        assert np.allclose(adjoint_arr(q) @ adjoint_arr(q) @ adjoint_arr(q) @ adjoint_arr(q), np.eye(4))


class TestCartanMaurer:
    """sigma_L = q^-1 dq and sigma_R = q dq^-1 on increments."""

    def test_forms_are_imaginary_for_unit_q(self, rng):
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        dq = rng.normal(size=4)
        dq -= (dq @ q) * q
        sl, sr = cartan_maurer_arr(q, dq)
        assert abs(sl[0]) < 1e-12 and abs(sr[0]) < 1e-12

    def test_adjoint_relation(self, rng):
        q, dq = rng.normal(size=(2, 4))
        sl, sr = cartan_maurer_arr(q, dq)
        assert np.allclose(sr, -qmul(q, qmul(sl, qinv(q))))


class TestZ2:
    """Representative of {q, -q} with first nonzero component positive."""

    @pytest.mark.parametrize(
        "q, expected",
        [([-1.0, 2.0, 0.0, 0.0], [1.0, -2.0, 0.0, 0.0]), ([0.0, -3.0, 1.0, 0.0], [0.0, 3.0, -1.0, 0.0])],
    )
    def test_examples(self, q, expected):
        assert np.allclose(z2_representative(np.array(q)), expected)

    def test_idempotent_on_pairs(self, rng):
        q = rng.normal(size=4)
        assert np.allclose(z2_representative(q), z2_representative(-q))
