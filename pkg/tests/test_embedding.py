"""Hankel embedding, window SVD bases, and coordinate projections.

Oracles: the rank-2 trigonometric identity cos(t+s) = cos s cos t -
sin s sin t for window ranks, direct SVD truncation error for
reconstruction residuals, and exact projection identities for
orthonormal bases.
"""

import numpy as np
import pytest

from convkoop import bases, embedding
from convkoop.exceptions import ContractError
from convkoop.systems import Trajectory


def cosine_trajectory(n=2000, dt=0.01):
    t = np.arange(n) * dt
    return Trajectory(np.cos(t)[None, :], dt)


class TestBuildHankel:
    def test_scalar_layout(self):
        traj = Trajectory(np.array([[1.0, 2.0, 3.0, 4.0, 5.0]]), 1.0)
        h = embedding.build_hankel(traj, 3)
        np.testing.assert_allclose(
            h.data, [[1, 2, 3], [2, 3, 4], [3, 4, 5]], atol=0
        )

    def test_two_channel_layout(self):
        traj = Trajectory(np.array([[1.0, 2.0, 3.0], [10.0, 20.0, 30.0]]), 1.0)
        h = embedding.build_hankel(traj, 2)
        # rows ordered ch0@delay0, ch1@delay0, ch0@delay1, ch1@delay1
        np.testing.assert_allclose(
            h.data, [[1, 2], [10, 20], [2, 3], [20, 30]], atol=0
        )

    def test_column_count_bookkeeping(self):
        # a 100-unit run at dt = 1e-3 (1e5 samples) embedded with 100
        # delays gives a 100 x 99901 matrix
        traj = Trajectory(np.arange(100000, dtype=float)[None, :], 0.001)
        h = embedding.build_hankel(traj, 100)
        assert h.data.shape == (100, 99901)
        assert h.n_cols == traj.n_samples - 100 + 1

    def test_shift_structure(self):
        rng = np.random.default_rng(0)
        traj = Trajectory(rng.standard_normal((2, 40)), 0.5)
        h = embedding.build_hankel(traj, 5)
        d = 2
        for n in range(1, 5):
            for ch in range(d):
                np.testing.assert_allclose(
                    h.data[ch + d * n, :-1], h.data[ch + d * (n - 1), 1:], atol=0
                )

    def test_too_short(self):
        traj = Trajectory(np.ones((1, 5)), 1.0)
        with pytest.raises(ContractError):
            embedding.build_hankel(traj, 5)

    def test_tau(self):
        traj = Trajectory(np.ones((1, 50)), 0.01)
        h = embedding.build_hankel(traj, 11)
        assert abs(h.tau - 0.05) < 1e-12


class TestSvdCoordinates:
    def test_cosine_signal_is_rank_two(self):
        h = embedding.build_hankel(cosine_trajectory(), 200)
        basis = embedding.svd_coordinates(h, 2)
        full = np.linalg.svd(h.data, compute_uv=False)
        assert np.sum(full > 1e-8 * full[0]) == 2
        assert basis.sigma[1] > 1e-8 * basis.sigma[0]

    def test_rank_one_unit_norm(self):
        h = embedding.build_hankel(cosine_trajectory(500), 50)
        basis = embedding.svd_coordinates(h, 1)
        assert basis.u.shape == (50, 1)
        assert abs(np.linalg.norm(basis.u[:, 0]) - 1.0) < 1e-12

    def test_rank_beyond_spectrum_rejected(self):
        h = embedding.build_hankel(cosine_trajectory(), 100)
        with pytest.raises(ContractError):
            embedding.svd_coordinates(h, 10)

    def test_orthonormal_and_canonical(self):
        h = embedding.build_hankel(cosine_trajectory(), 100)
        b = embedding.svd_coordinates(h, 2)
        np.testing.assert_allclose(b.u.T @ b.u, np.eye(2), atol=1e-10)
        np.testing.assert_allclose(b.v.T @ b.v, np.eye(2), atol=1e-10)
        for j in range(2):
            assert b.u[np.argmax(np.abs(b.u[:, j])), j] > 0

    def test_sigma_descending(self):
        rng = np.random.default_rng(1)
        traj = Trajectory(rng.standard_normal((1, 300)), 0.1)
        b = embedding.svd_coordinates(embedding.build_hankel(traj, 20), 10)
        assert np.all(np.diff(b.sigma) <= 0)


class TestGramRoute:
    def test_matches_direct_svd(self):
        # frequencies chosen so omega * tau is order one and the spectrum
        # is well separated; the normal-equations route squares the
        # condition number, so a crowded spectrum would lose digits
        t = np.arange(30000) * 0.002
        signal = np.sin(15.0 * t) + 0.7 * np.sin(37.0 * t + 0.5) + 0.4 * np.sin(71.0 * t)
        traj = Trajectory(signal[None, :], 0.002)
        direct = embedding.svd_basis_from_trajectory(traj, 60, 6, method="direct")
        gram = embedding.svd_basis_from_trajectory(traj, 60, 6, method="gram")
        np.testing.assert_allclose(gram.sigma, direct.sigma, rtol=1e-9)
        np.testing.assert_allclose(gram.u, direct.u, atol=1e-8)
        np.testing.assert_allclose(gram.v, direct.v, atol=1e-7)

    def test_multichannel_matches(self):
        t = np.arange(5000) * 0.01
        x = np.vstack([np.sin(t), np.cos(2.2 * t)])
        traj = Trajectory(x, 0.01)
        direct = embedding.svd_basis_from_trajectory(traj, 25, 4, method="direct")
        gram = embedding.svd_basis_from_trajectory(traj, 25, 4, method="gram")
        np.testing.assert_allclose(gram.sigma, direct.sigma, rtol=1e-9)
        np.testing.assert_allclose(gram.u, direct.u, atol=1e-8)

    def test_time_side_orthonormal(self):
        t = np.arange(30000) * 0.002
        traj = Trajectory(np.sin(t)[None, :], 0.002)
        b = embedding.svd_basis_from_trajectory(traj, 40, 2, method="gram")
        np.testing.assert_allclose(b.v.T @ b.v, np.eye(2), atol=1e-10)


class TestConvCoordinates:
    def test_svd_projection_identity(self):
        # coordinates of the generating trajectory are exactly the scaled
        # time-side factors
        traj = cosine_trajectory()
        svd = embedding.svd_basis_from_trajectory(traj, 200, 2, method="direct")
        series = embedding.conv_coordinates(traj, embedding.basis_from_svd(svd), 200)
        expected = (svd.sigma_continuous * svd.v_continuous()).T
        scale = np.abs(expected).max()
        assert np.abs(series.values - expected).max() < 1e-10 * scale

    def test_constant_filter_projects_mean(self):
        n = 101
        dt = 0.01
        tau = (n - 1) * dt / 2
        traj = Trajectory(np.full((1, 500), 3.0), dt)
        basis = bases.fourier_basis(1, tau, bases.window_grid(n, dt))
        series = embedding.conv_coordinates(traj, basis, n)
        np.testing.assert_allclose(series.values[0], 3.0 * np.sqrt(2 * tau), atol=1e-12)

    def test_odd_filter_kills_constant(self):
        n = 101
        dt = 0.01
        tau = (n - 1) * dt / 2
        traj = Trajectory(np.full((1, 300), 2.5), dt)
        basis = bases.legendre_basis(2, tau, bases.window_grid(n, dt))
        series = embedding.conv_coordinates(traj, basis, n)
        assert np.abs(series.values[1]).max() < 1e-12

    def test_output_length_and_times(self):
        traj = cosine_trajectory(800)
        svd = embedding.svd_basis_from_trajectory(traj, 100, 2, method="direct")
        series = embedding.conv_coordinates(traj, embedding.basis_from_svd(svd), 100)
        assert series.n_samples == 800 - 100 + 1
        assert abs(series.t0 - (traj.t0 + 99 * traj.dt / 2)) < 1e-12

    def test_grid_mismatch(self):
        traj = cosine_trajectory(500)
        basis = bases.legendre_basis(3, 1.0, bases.window_grid(201, 0.01))
        with pytest.raises(ContractError):
            embedding.conv_coordinates(traj, basis, 101)

    def test_channel_mismatch(self):
        traj = Trajectory(np.ones((2, 300)), 0.01)
        basis = bases.legendre_basis(3, 0.5, bases.window_grid(101, 0.01))
        with pytest.raises(ContractError):
            embedding.conv_coordinates(traj, basis, 101)


class TestReconstructWindow:
    def test_full_rank_round_trip(self):
        rng = np.random.default_rng(2)
        t = np.arange(300) * 0.05
        signal = np.sin(t) + 0.3 * np.sin(2.7 * t) + 0.05 * rng.standard_normal(t.size)
        traj = Trajectory(signal[None, :], 0.05)
        n = 20
        h = embedding.build_hankel(traj, n)
        svd = embedding.svd_coordinates(h, n)
        spec = embedding.basis_from_svd(svd)
        series = embedding.conv_coordinates(traj, spec, n)
        m = 57
        window = embedding.reconstruct_window(series.values[:, m], spec)
        assert np.abs(window - h.data[:, m]).max() < 1e-9 * np.abs(h.data).max()

    def test_rank_one_residual_is_sigma2_level(self):
        # truncation error oracle: dropping the second window component
        # of a rank-2 signal leaves exactly sigma_2 in Frobenius norm
        traj = cosine_trajectory()
        h = embedding.build_hankel(traj, 200)
        svd = embedding.svd_coordinates(h, 2)
        rank1 = svd.u[:, :1] * svd.sigma[0] @ svd.v[:, :1].T
        residual = np.linalg.norm(h.data - rank1)
        assert abs(residual - svd.sigma[1]) < 1e-6 * svd.sigma[0]

    def test_zero_coordinates(self):
        traj = cosine_trajectory(600)
        svd = embedding.svd_basis_from_trajectory(traj, 50, 2, method="direct")
        spec = embedding.basis_from_svd(svd)
        window = embedding.reconstruct_window(np.zeros(2), spec)
        np.testing.assert_allclose(window, 0.0, atol=0)

    def test_too_many_coordinates(self):
        traj = cosine_trajectory(600)
        svd = embedding.svd_basis_from_trajectory(traj, 50, 2, method="direct")
        spec = embedding.basis_from_svd(svd)
        with pytest.raises(ContractError):
            embedding.reconstruct_window(np.zeros(3), spec)


class TestSvdBasisHelpers:
    def test_truncate_shares_token(self):
        traj = cosine_trajectory()
        basis = embedding.svd_basis_from_trajectory(traj, 100, 2, method="direct")
        assert basis.truncate(1).token() == basis.token()

    def test_continuous_rescaling(self):
        traj = cosine_trajectory()
        basis = embedding.svd_basis_from_trajectory(traj, 100, 2, method="direct")
        spec = embedding.basis_from_svd(basis)
        # continuous values integrate to unit L2 norm under the weights
        norms = (spec.values**2 * spec.full_weights()).sum(axis=1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-12)
