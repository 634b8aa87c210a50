"""Linear-algebra and calculus primitives against independent oracles.

Ground truths: direct matrix multiplication for SVD reconstruction, the
quadratic formula for companion-matrix eigenvalues, normal equations for
the pseudoinverse, analytic derivatives and closed-form integrals for the
stencils and quadrature.
"""

import numpy as np
import pytest

from convkoop import numerics
from convkoop.exceptions import ContractError


class TestTruncatedSvd:
    def test_identity(self):
        f = numerics.truncated_svd(np.eye(3), 3)
        np.testing.assert_allclose(f.sigma, np.ones(3), atol=1e-12)

    def test_diagonal_truncation(self):
        f = numerics.truncated_svd(np.diag([3.0, 2.0, 1.0]), 2)
        np.testing.assert_allclose(f.sigma, [3.0, 2.0], atol=1e-12)

    def test_full_rank_reconstruction(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((50, 40))
        f = numerics.truncated_svd(a, 40)
        recon = f.u @ np.diag(f.sigma) @ f.v.T
        assert np.linalg.norm(a - recon) <= 1e-10 * f.sigma[0]

    def test_round_trip_random_shapes(self):
        rng = np.random.default_rng(1)
        for m, n in [(5, 5), (8, 3), (3, 8), (20, 12)]:
            a = rng.standard_normal((m, n))
            f = numerics.truncated_svd(a, min(m, n))
            err = np.linalg.norm(a - f.u @ np.diag(f.sigma) @ f.v.T)
            assert err <= 1e-9 * max(1.0, f.sigma[0])
            np.testing.assert_allclose(f.u.T @ f.u, np.eye(f.rank), atol=1e-10)
            np.testing.assert_allclose(f.v.T @ f.v, np.eye(f.rank), atol=1e-10)
            assert np.all(np.diff(f.sigma) <= 1e-12)

    def test_rank_out_of_range(self):
        with pytest.raises(ContractError):
            numerics.truncated_svd(np.eye(3), 4)
        with pytest.raises(ContractError):
            numerics.truncated_svd(np.eye(3), 0)

    def test_non_finite_rejected(self):
        a = np.eye(3)
        a[1, 1] = np.nan
        with pytest.raises(ContractError):
            numerics.truncated_svd(a, 2)


class TestEig:
    def test_rotation_generator(self):
        d = numerics.eig(np.array([[0.0, -1.0], [1.0, 0.0]]))
        np.testing.assert_allclose(d.values, [1j, -1j], atol=1e-12)

    def test_diagonal_ordering(self):
        d = numerics.eig(np.diag([2.0, 5.0]))
        np.testing.assert_allclose(d.values, [5.0, 2.0], atol=1e-12)

    def test_companion_matrix_quadratic_oracle(self):
        # companion of lambda^2 + 2 lambda + 2; roots from the formula
        companion = np.array([[0.0, -2.0], [1.0, -2.0]])
        roots = np.roots([1.0, 2.0, 2.0])
        expected = sorted(roots, key=lambda z: (-z.imag, -z.real))
        d = numerics.eig(companion)
        np.testing.assert_allclose(d.values, expected, atol=1e-12)

    def test_consistency_random(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            m = rng.standard_normal((20, 20))
            d = numerics.eig(m)
            resid = np.abs(m @ d.vectors - d.vectors * d.values).max()
            assert resid <= 1e-8 * np.abs(m).max()

    def test_not_square(self):
        with pytest.raises(ContractError):
            numerics.eig(np.ones((2, 3)))


class TestPseudoinverse:
    def test_diagonal(self):
        p = numerics.pseudoinverse(np.diag([2.0, 0.0]), 1e-12)
        np.testing.assert_allclose(p, np.diag([0.5, 0.0]), atol=1e-12)

    def test_orthonormal_columns(self):
        rng = np.random.default_rng(3)
        q, _ = np.linalg.qr(rng.standard_normal((8, 4)))
        np.testing.assert_allclose(numerics.pseudoinverse(q, 1e-12), q.T, atol=1e-10)

    def test_against_normal_equations(self):
        rng = np.random.default_rng(4)
        a = rng.standard_normal((10, 4))
        p = numerics.pseudoinverse(a, 1e-12)
        oracle = np.linalg.inv(a.T @ a) @ a.T
        np.testing.assert_allclose(p, oracle, atol=1e-10)
        np.testing.assert_allclose(p @ a, np.eye(4), atol=1e-8)

    def test_penrose_identities(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((7, 5)) @ np.diag([3.0, 1.0, 0.5, 0.1, 0.0]) @ \
            rng.standard_normal((5, 5))
        p = numerics.pseudoinverse(a, 1e-10)
        np.testing.assert_allclose(a @ p @ a, a, atol=1e-8)
        np.testing.assert_allclose(p @ a @ p, p, atol=1e-8)
        np.testing.assert_allclose(a @ p, (a @ p).T, atol=1e-8)
        np.testing.assert_allclose(p @ a, (p @ a).T, atol=1e-8)


class TestFiniteDiff:
    def test_constant_is_zero(self):
        out = numerics.finite_diff(np.full(50, 3.7), 0.1)
        np.testing.assert_allclose(out, 0.0, atol=1e-12)

    def test_quadratic(self):
        t = np.arange(200) * 0.01
        d = numerics.finite_diff(t**2, 0.01)
        np.testing.assert_allclose(d[2:-2], 2.0 * t[2:-2], atol=1e-8)

    def test_sine(self):
        t = np.arange(5000) * 0.001
        d = numerics.finite_diff(np.sin(t), 0.001)
        np.testing.assert_allclose(d[2:-2], np.cos(t[2:-2]), atol=1e-10)

    def test_convergence_order(self):
        def worst_error(dt):
            t = np.arange(0.0, 2.0, dt)
            d = numerics.finite_diff(np.exp(np.sin(t)), dt)
            truth = np.cos(t) * np.exp(np.sin(t))
            return np.abs(d - truth).max()

        e1, e2 = worst_error(2e-3), worst_error(1e-3)
        order = np.log2(e1 / e2)
        assert order >= 3.5

    def test_boundary_stencils_are_fourth_order(self):
        t = np.arange(100) * 0.01
        d = numerics.finite_diff(np.sin(t), 0.01)
        np.testing.assert_allclose(d, np.cos(t), atol=1e-7)

    def test_too_few_samples(self):
        with pytest.raises(ContractError):
            numerics.finite_diff(np.ones(4), 0.1)

    def test_2d_axis(self):
        t = np.arange(300) * 0.01
        data = np.vstack([t**2, np.sin(t)])
        d = numerics.finite_diff(data, 0.01, axis=1)
        np.testing.assert_allclose(d[0, 2:-2], 2 * t[2:-2], atol=1e-8)
        np.testing.assert_allclose(d[1, 2:-2], np.cos(t)[2:-2], atol=1e-9)


class TestQuadInner:
    def test_constant(self):
        n = 11
        s = np.linspace(-1, 1, n)
        val = numerics.quad_inner(np.ones(n), np.ones(n), s[1] - s[0])
        assert abs(val - 2.0) < 1e-14

    def test_odd_integrand(self):
        s = np.linspace(-1, 1, 101)
        val = numerics.quad_inner(s, np.ones_like(s), s[1] - s[0])
        assert abs(val) < 1e-14

    def test_cosine_squared(self):
        # closed form: integral of cos(pi s)^2 over [-1, 1] is 1
        s = np.linspace(-1, 1, 2001)
        f = np.cos(np.pi * s)
        assert abs(numerics.quad_inner(f, f, s[1] - s[0]) - 1.0) < 1e-6

    def test_length_mismatch(self):
        with pytest.raises(ContractError):
            numerics.quad_inner(np.ones(5), np.ones(6), 0.1)
