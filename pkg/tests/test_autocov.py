"""Autocovariance fast path against the exact product and closed forms.

Oracles: the Gram identity eig(H H^T) = sigma^2, the stationary
autocovariance of a sinusoid A(lag) = cos(omega lag)/2, and the exact
path itself for subspace comparisons.
"""

import numpy as np
import pytest
from scipy.linalg import subspace_angles

from convkoop import autocov, embedding
from convkoop.exceptions import ContractError
from convkoop.numerics import truncated_svd
from convkoop.systems import Trajectory


def sinusoid(omega=2.0, dt=0.01, n=40000):
    t = np.arange(n) * dt
    return Trajectory(np.cos(omega * t)[None, :], dt)


class TestAutocovExact:
    def test_orthogonal_rows_give_diagonal(self):
        data = np.array([[1.0, 1.0, 1.0, 1.0], [1.0, -1.0, 1.0, -1.0]])
        h = embedding.HankelMatrix(data, 2, 1, 0.1)
        a = autocov.autocov_exact(h)
        assert abs(a.matrix[0, 1]) < 1e-14
        np.testing.assert_allclose(np.diag(a.matrix), [4.0, 4.0], atol=1e-14)

    def test_cosine_hankel_rank_two(self):
        traj = sinusoid(n=3000)
        h = embedding.build_hankel(traj, 100)
        a = autocov.autocov_exact(h)
        evals = np.linalg.eigvalsh(a.matrix)[::-1]
        assert evals[1] > 1e-8 * evals[0]
        assert evals[2] < 1e-10 * evals[0]

    def test_gram_identity(self):
        rng = np.random.default_rng(0)
        traj = Trajectory(rng.standard_normal((1, 500)), 0.1)
        h = embedding.build_hankel(traj, 30)
        a = autocov.autocov_exact(h)
        evals = np.sort(np.linalg.eigvalsh(a.matrix))[::-1]
        sigma = truncated_svd(h.data, 30).sigma
        np.testing.assert_allclose(evals, sigma**2, rtol=1e-8)

    def test_symmetry(self):
        traj = sinusoid(n=2000)
        a = autocov.autocov_exact(embedding.build_hankel(traj, 50))
        np.testing.assert_allclose(a.matrix, a.matrix.T, atol=0)


class TestAutocovTaylor:
    def test_order_zero_constant_blocks(self):
        rng = np.random.default_rng(1)
        traj = Trajectory(rng.standard_normal((2, 2000)), 0.05)
        a = autocov.autocov_taylor(traj, 5, 0)
        x = traj.samples
        m0 = x @ x.T / x.shape[1] * (traj.n_samples - 5 + 1)
        for p in range(5):
            for q in range(5):
                block = a.matrix[2 * p : 2 * p + 2, 2 * q : 2 * q + 2]
                sym = 0.5 * (m0 + m0.T)
                np.testing.assert_allclose(block, sym, atol=1e-10)

    def test_matches_stationary_cosine_oracle(self):
        # stationary oracle: mean of cos(w t + w p) cos(w t + w q) is
        # cos(w (p - q)) / 2; the expansion at order 8 resolves lags with
        # omega * lag up to about one
        omega = 2.0
        traj = sinusoid(omega=omega, dt=0.01, n=40000)
        n_delays = 51
        a = autocov.autocov_taylor(traj, n_delays, 8)
        n_windows = traj.n_samples - n_delays + 1
        lag = np.subtract.outer(np.arange(n_delays), np.arange(n_delays)) * traj.dt
        oracle = 0.5 * np.cos(omega * lag) * n_windows
        assert np.abs(a.matrix - oracle).max() / n_windows < 1e-3

    def test_error_decreases_with_order(self):
        omega = 2.0
        traj = sinusoid(omega=omega, dt=0.01, n=40000)
        n_delays = 51
        lag = np.subtract.outer(np.arange(n_delays), np.arange(n_delays)) * traj.dt
        n_windows = traj.n_samples - n_delays + 1
        oracle = 0.5 * np.cos(omega * lag) * n_windows
        errs = []
        for order in (0, 2, 4, 6):
            a = autocov.autocov_taylor(traj, n_delays, order)
            errs.append(np.abs(a.matrix - oracle).max() / n_windows)
        assert all(e2 < e1 for e1, e2 in zip(errs, errs[1:]))

    def test_order_bounds(self):
        traj = sinusoid(n=1000)
        with pytest.raises(ContractError):
            autocov.autocov_taylor(traj, 10, 9)

    def test_short_series_rejected(self):
        traj = Trajectory(np.ones((1, 30)), 0.1)
        with pytest.raises(ContractError):
            autocov.autocov_taylor(traj, 10, 8)


class TestBasisFromAutocov:
    def test_matches_truncated_svd(self):
        traj = sinusoid(n=5000)
        h = embedding.build_hankel(traj, 80)
        a = autocov.autocov_exact(h)
        from_gram = autocov.basis_from_autocov(a, 2)
        direct = embedding.svd_coordinates(h, 2)
        np.testing.assert_allclose(from_gram.sigma, direct.sigma, rtol=1e-8)
        np.testing.assert_allclose(from_gram.u, direct.u, atol=1e-7)
        assert from_gram.v is None

    def test_diagonal_sigma(self):
        a = autocov.Autocovariance(np.diag([4.0, 1.0]), 2, 1, 0.1, None)
        basis = autocov.basis_from_autocov(a, 2)
        np.testing.assert_allclose(basis.sigma, [2.0, 1.0], atol=1e-12)

    def test_taylor_subspace_close_to_exact(self):
        # richer-than-rank-2 signal: two incommensurate tones
        t = np.arange(60000) * 0.005
        sig = np.cos(2.0 * t) + 0.6 * np.cos(5.1 * t + 0.3)
        traj = Trajectory(sig[None, :], 0.005)
        exact = autocov.basis_from_autocov(
            autocov.autocov_exact(embedding.build_hankel(traj, 40)), 4
        )
        taylor = autocov.basis_from_autocov(autocov.autocov_taylor(traj, 40, 6), 4)
        angle = subspace_angles(exact.u, taylor.u).max()
        assert angle < 0.05

    def test_asymmetric_rejected(self):
        a = autocov.Autocovariance(np.array([[1.0, 0.5], [0.0, 1.0]]), 2, 1, 0.1, None)
        with pytest.raises(ContractError):
            autocov.basis_from_autocov(a, 1)

    def test_rank_beyond_spectrum(self):
        a = autocov.Autocovariance(np.diag([1.0, 0.0]), 2, 1, 0.1, None)
        with pytest.raises(ContractError):
            autocov.basis_from_autocov(a, 2)
