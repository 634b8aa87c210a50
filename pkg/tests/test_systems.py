"""Benchmark generators against closed-form oracles.

Oracles: the rotation solution cos/sin for the linear blocks, energy
conservation for the harmonic limit, the exact 1-soliton modulus
sech(x) and the exactly conserved L2 norm for the wave equation.
"""

import numpy as np
import pytest

from convkoop import systems
from convkoop.exceptions import ContractError, NumericFailure


class TestLinearSystem:
    def test_rotation_matches_cosine(self):
        spec = systems.LinearRandomImag((1.0,))
        traj = systems.integrate_rk4(spec, np.array([1.0, 0.0]), 0.001, 1000)
        assert abs(traj.samples[0, -1] - np.cos(1.0)) < 1e-9

    def test_make_linear_random_deterministic(self):
        a = systems.make_linear_random(123, 5, 10.0, 0.5)
        b = systems.make_linear_random(123, 5, 10.0, 0.5)
        assert a == b

    def test_min_gap_respected(self):
        spec = systems.make_linear_random(42, 5, 10.0, 0.5)
        freqs = np.array(spec.frequencies)
        gaps = np.abs(freqs[:, None] - freqs[None, :])[~np.eye(5, dtype=bool)]
        assert gaps.min() >= 0.5
        assert np.all(freqs > 0) and np.all(freqs <= 10.0)

    def test_infeasible_gap_raises(self):
        with pytest.raises(NumericFailure):
            systems.make_linear_random(42, 5, 10.0, 20.0)

    def test_dimension_mismatch(self):
        spec = systems.LinearRandomImag((1.0, 2.0))
        with pytest.raises(ContractError):
            systems.integrate_rk4(spec, np.array([1.0, 0.0]), 0.01, 10)

    def test_default_state_normalized(self):
        spec = systems.make_linear_random(3, 4, 5.0)
        x0 = systems.default_initial_state(spec)
        assert abs(np.linalg.norm(x0) - 1.0) < 1e-12
        assert x0[0] > 0


class TestVanDerPol:
    def test_harmonic_limit_period(self):
        # mu = 0 is a harmonic oscillator: the state returns after 2 pi
        dt = 0.001
        steps = int(round(2 * np.pi / dt))
        traj = systems.integrate_rk4(systems.VanDerPol(0.0), np.array([2.0, 0.0]), dt, steps)
        # interpolate the last step to exactly t = 2 pi
        t_last = steps * dt
        frac = (2 * np.pi - (t_last - dt)) / dt
        x_at = traj.samples[:, -2] + frac * (traj.samples[:, -1] - traj.samples[:, -2])
        assert np.abs(x_at - np.array([2.0, 0.0])).max() < 1e-5

    def test_energy_drift_harmonic(self):
        traj = systems.integrate_rk4(
            systems.VanDerPol(0.0), np.array([2.0, 0.0]), 0.001, 100000
        )
        energy = 0.5 * (traj.samples[0] ** 2 + traj.samples[1] ** 2)
        assert np.abs(energy - energy[0]).max() / energy[0] <= 1e-8

    def test_blow_up_reports_step(self):
        with pytest.raises(NumericFailure, match="step"):
            systems.integrate_rk4(
                systems.VanDerPol(5.0), np.array([1e3, 1e3]), 10.0, 50
            )


class TestLorenz:
    def test_bounded_on_attractor(self):
        traj = systems.integrate_rk4(
            systems.Lorenz(), np.array([1.0, 1.0, 1.0]), 0.001, 100000
        )
        assert np.abs(traj.samples[2]).max() < 60.0

    def test_sensitivity_flag(self):
        # tiny initial separations grow; sanity flag only, no tolerance
        x0 = np.array([1.0, 1.0, 1.0])
        a = systems.integrate_rk4(systems.Lorenz(), x0, 0.001, 30000)
        b = systems.integrate_rk4(systems.Lorenz(), x0 + 1e-12, 0.001, 30000)
        start = np.abs(a.samples[:, 0] - b.samples[:, 0]).max()
        end = np.abs(a.samples[:, -1] - b.samples[:, -1]).max()
        assert end > 1e3 * max(start, 1e-12)


class TestNls:
    def test_norm_conserved(self):
        spec = systems.Nls(n_grid=128, t_final=5.0, n_snapshots=100)
        traj = systems.simulate_nls(spec)
        x = systems.nls_grid(spec)
        dx = x[1] - x[0]
        u = traj.samples[:128] + 1j * traj.samples[128:]
        norms = np.sqrt((np.abs(u) ** 2).sum(axis=0) * dx)
        assert np.abs(norms - norms[0]).max() / norms[0] < 1e-6

    def test_single_soliton_shape_invariant(self):
        # |u(x, t)| = sech(x) exactly for u0 = sech
        spec = systems.Nls(n_grid=256, t_final=10.0, n_snapshots=200)
        traj = systems.simulate_nls(spec, u0=lambda x: 1.0 / np.cosh(x))
        x = systems.nls_grid(spec)
        u = traj.samples[:256] + 1j * traj.samples[256:]
        profile_err = np.abs(np.abs(u) - (1.0 / np.cosh(x))[:, None]).max()
        assert profile_err < 1e-4

    def test_breather_recurrence_period(self):
        # the 2 sech initial condition recurs with period pi/2: dominant
        # angular frequency of |u(0, t)| is 4 within a few percent
        spec = systems.Nls()
        traj = systems.simulate_nls(spec)
        center = spec.n_grid // 2
        u = traj.samples[:spec.n_grid] + 1j * traj.samples[spec.n_grid:]
        c = np.abs(u[center])
        amp = np.abs(np.fft.rfft(c - c.mean()))
        freq = 2 * np.pi * np.fft.rfftfreq(c.size, d=traj.dt)
        peak = freq[np.argmax(amp)]
        assert abs(peak - 4.0) < 0.1

    def test_channel_layout(self):
        spec = systems.Nls(n_grid=64, t_final=1.0, n_snapshots=20)
        traj = systems.simulate_nls(spec)
        assert traj.channels == 128
        assert traj.n_samples == 20
        # initial condition is real: imaginary channels start at zero
        np.testing.assert_allclose(traj.samples[64:, 0], 0.0, atol=1e-14)

    def test_power_of_two_enforced(self):
        with pytest.raises(ContractError):
            systems.Nls(n_grid=100)


class TestVdpAsymptotic:
    def test_harmonic_limit(self):
        x, omega = systems.vdp_asymptotic(0.0, 0.0)
        assert x == 2.0 and omega == 1.0

    def test_frequency_correction(self):
        _, omega = systems.vdp_asymptotic(0.1, 0.0)
        assert abs(omega - 1.004375) < 1e-12

    def test_expansion_at_zero(self):
        x, _ = systems.vdp_asymptotic(0.1, 0.0)
        assert abs(x - 2.0) < 1e-12

    def test_domain(self):
        with pytest.raises(ContractError):
            systems.vdp_asymptotic(0.8, 0.0)


class TestTrajectory:
    def test_validation(self):
        with pytest.raises(ContractError):
            systems.Trajectory(np.ones((2, 1)), 0.1)
        with pytest.raises(ContractError):
            systems.Trajectory(np.full((1, 10), np.inf), 0.1)
        with pytest.raises(ContractError):
            systems.Trajectory(np.ones((1, 10)), -0.1)

    def test_times(self):
        traj = systems.Trajectory(np.ones((1, 5)), 0.5, t0=1.0)
        np.testing.assert_allclose(traj.times, [1.0, 1.5, 2.0, 2.5, 3.0])
