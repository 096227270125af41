"""Forward-mode dual numbers used for exact first and second derivatives."""

import numpy as np

from ghqk import dual
from ghqk.dual import Dual, imag_part, real_part


class TestDual:
    """Arithmetic, elementary functions and nesting."""

    def test_product_rule(self):
        x = Dual(2.0, 1.0)
        y = x * x * x + 3.0 / x
        assert np.isclose(y.val, 8.0 + 1.5)
        assert np.isclose(y.eps, 12.0 - 0.75)

    def test_functions(self):
        x = Dual(0.7, 1.0)
        assert np.isclose(x.sqrt().eps, 0.5 / np.sqrt(0.7))
        assert np.isclose(np.sqrt(x).eps, 0.5 / np.sqrt(0.7))
        assert np.isclose(x.exp().eps, np.exp(0.7))
        assert np.isclose(x.log().eps, 1 / 0.7)
        assert np.isclose(x.sin().eps, np.cos(0.7))

    def test_complex_values_and_parts(self):
        z = Dual(1.0 + 2.0j, 1.0)
        w = z * z
        assert np.isclose(w.eps, 2.0 * (1.0 + 2.0j))
        assert np.isclose(real_part(w).eps, 2.0)
        assert np.isclose(imag_part(w).eps, 4.0)

    def test_gradient_and_hessian(self, rng):
        A = rng.normal(size=(3, 3))
        A = A + A.T
        f = lambda x: 0.5 * sum(x[i] * A[i, j] * x[j] for i in range(3) for j in range(3))
        x = rng.normal(size=3)
        assert np.allclose(dual.gradient(f, x), A @ x)
        assert np.allclose(dual.hessian(f, x), A)

    def test_complex_gradient_keeps_imaginary_part(self):
        g = dual.gradient(lambda x: (x[0] + 1j * x[1]) ** 2, np.array([1.0, 2.0]))
        assert np.allclose(g, [2.0 * (1 + 2j), 2j * (1 + 2j)])
