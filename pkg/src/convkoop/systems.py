"""Benchmark trajectory generators and closed-form reference quantities.

Four test systems: block-rotation linear systems with seeded random
imaginary spectra, the Van der Pol oscillator, the Lorenz system, and the
focusing cubic Schrodinger equation on a periodic interval. ODE systems
are integrated with fixed-step classical RK4; the wave equation uses a
Strang split-step Fourier scheme with the complex field stored as stacked
real/imaginary channels so everything downstream stays real-valued.
"""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ContractError, NumericFailure


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled multichannel time series.

    ``samples`` has shape (channels, n_samples); ``dt`` is the sampling
    interval and ``t0`` the time of the first sample.
    """

    samples: np.ndarray
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 2:
            raise ContractError("trajectory samples must be 2-D (channels x time)")
        if samples.shape[1] < 2:
            raise ContractError("trajectory needs at least 2 samples")
        if self.dt <= 0:
            raise ContractError("dt must be positive")
        if not np.all(np.isfinite(samples)):
            raise ContractError("trajectory contains non-finite samples")
        object.__setattr__(self, "samples", samples)

    @property
    def channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_samples)

    def channel(self, d: int) -> np.ndarray:
        return self.samples[d]

    def select_channels(self, indices) -> "Trajectory":
        return Trajectory(self.samples[list(indices)], self.dt, self.t0)


@dataclass(frozen=True)
class LinearRandomImag:
    """Block-diagonal rotations: one 2x2 block per frequency, so the
    spectrum is +/- i omega_j."""

    frequencies: tuple

    def __post_init__(self):
        if len(self.frequencies) < 1:
            raise ContractError("need at least one frequency")
        if any(w <= 0 for w in self.frequencies):
            raise ContractError("frequencies must be positive")

    @property
    def dim(self) -> int:
        return 2 * len(self.frequencies)


@dataclass(frozen=True)
class VanDerPol:
    mu: float

    def __post_init__(self):
        if self.mu < 0:
            raise ContractError("mu must be nonnegative")

    dim = 2


@dataclass(frozen=True)
class Lorenz:
    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0

    dim = 3


@dataclass(frozen=True)
class Nls:
    """Focusing cubic Schrodinger preset: i u_t + u_xx / 2 + |u|^2 u = 0 on
    [-x_half_width, x_half_width] with periodic boundaries."""

    n_grid: int = 256
    x_half_width: float = 15.0
    t_final: float = 16.0 * math.pi
    n_snapshots: int = 2000

    def __post_init__(self):
        if self.n_grid < 4 or (self.n_grid & (self.n_grid - 1)) != 0:
            raise ContractError("n_grid must be a power of two")
        if self.x_half_width <= 0 or self.t_final <= 0 or self.n_snapshots < 2:
            raise ContractError("bad NLS parameters")


def make_linear_random(
    seed: int,
    n_pairs: int,
    omega_max: float,
    min_gap: float = 0.0,
    omega_min: float = 0.0,
    max_attempts: int = 200000,
) -> LinearRandomImag:
    """Draw ``n_pairs`` distinct frequencies uniformly in
    (omega_min, omega_max] with pairwise gaps >= ``min_gap`` by rejection
    sampling; deterministic for a fixed seed.

    ``omega_min`` keeps a frequency's own +/- pair from crowding itself on
    short windows. A partial set that leaves no room is abandoned after a
    bounded number of consecutive rejections, so tight but feasible gap
    requirements terminate; infeasible ones fail after ``max_attempts``
    total draws.
    """
    if n_pairs < 1:
        raise ContractError("n_pairs must be at least 1")
    if omega_max <= 0 or omega_min < 0 or omega_min >= omega_max:
        raise ContractError("need 0 <= omega_min < omega_max")
    if min_gap * (n_pairs - 1) >= omega_max - omega_min:
        raise NumericFailure(
            f"{n_pairs} frequencies with pairwise gap {min_gap} cannot fit "
            f"in ({omega_min}, {omega_max}]"
        )
    rng = np.random.default_rng(seed)
    span = omega_max - omega_min
    chosen: list[float] = []
    attempts = 0
    stuck = 0
    while len(chosen) < n_pairs:
        if attempts >= max_attempts:
            raise NumericFailure(
                f"could not place {n_pairs} frequencies with gap {min_gap} "
                f"in ({omega_min}, {omega_max}] after {max_attempts} draws"
            )
        attempts += 1
        w = float(omega_min + span * (1.0 - rng.random()))
        if all(abs(w - v) >= min_gap for v in chosen):
            chosen.append(w)
            stuck = 0
        else:
            stuck += 1
            if stuck >= 50:
                chosen.clear()
                stuck = 0
    return LinearRandomImag(tuple(chosen))


def default_initial_state(spec) -> np.ndarray:
    """Reference initial conditions: each rotation pair starts at (1, 0)
    with the full state normalized; Van der Pol starts at (2, 0); Lorenz
    at (1, 1, 1)."""
    if isinstance(spec, LinearRandomImag):
        x0 = np.zeros(spec.dim)
        x0[0::2] = 1.0
        return x0 / np.linalg.norm(x0)
    if isinstance(spec, VanDerPol):
        return np.array([2.0, 0.0])
    if isinstance(spec, Lorenz):
        return np.array([1.0, 1.0, 1.0])
    raise ContractError(f"no default initial state for {type(spec).__name__}")


def vector_field(spec):
    """Right-hand side f(x) of the autonomous ODE for a system spec."""
    if isinstance(spec, LinearRandomImag):
        a = linear_system_matrix(spec)

        def f_linear(x):
            return a @ x

        return f_linear
    if isinstance(spec, VanDerPol):
        mu = spec.mu

        def f_vdp(x):
            return np.array([x[1], mu * (1.0 - x[0] ** 2) * x[1] - x[0]])

        return f_vdp
    if isinstance(spec, Lorenz):
        sig, rho, beta = spec.sigma, spec.rho, spec.beta

        def f_lorenz(x):
            return np.array(
                [
                    sig * (x[1] - x[0]),
                    x[0] * (rho - x[2]) - x[1],
                    x[0] * x[1] - beta * x[2],
                ]
            )

        return f_lorenz
    raise ContractError(f"{type(spec).__name__} is not an ODE system")


def linear_system_matrix(spec: LinearRandomImag) -> np.ndarray:
    a = np.zeros((spec.dim, spec.dim))
    for i, w in enumerate(spec.frequencies):
        a[2 * i, 2 * i + 1] = w
        a[2 * i + 1, 2 * i] = -w
    return a


def integrate_rk4(spec, x0, dt: float, steps: int) -> Trajectory:
    """Classical fixed-step fourth-order Runge-Kutta integration.

    Returns a trajectory of ``steps + 1`` samples. A non-finite state
    aborts with the offending step index.
    """
    if dt <= 0:
        raise ContractError("dt must be positive")
    if steps < 1:
        raise ContractError("steps must be at least 1")
    x0 = np.asarray(x0, dtype=float)
    expected = spec.dim
    if x0.shape != (expected,):
        raise ContractError(
            f"initial state has dimension {x0.shape}, expected ({expected},)"
        )

    if isinstance(spec, LinearRandomImag):
        # for a linear RHS the RK4 step is exactly x <- R x with the
        # degree-4 Taylor polynomial of exp(dt * A)
        a = linear_system_matrix(spec) * dt
        r = np.eye(expected) + a + a @ a / 2.0 + a @ a @ a / 6.0 + a @ a @ a @ a / 24.0
        out = np.empty((expected, steps + 1))
        out[:, 0] = x0
        x = x0.copy()
        for k in range(1, steps + 1):
            x = r @ x
            out[:, k] = x
        if not np.all(np.isfinite(x)):
            raise NumericFailure(f"state blew up by step {steps}")
        return Trajectory(out, dt)

    f = vector_field(spec)
    out = np.empty((expected, steps + 1))
    out[:, 0] = x0
    x = x0.copy()
    half = 0.5 * dt
    sixth = dt / 6.0
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, steps + 1):
            k1 = f(x)
            k2 = f(x + half * k1)
            k3 = f(x + half * k2)
            k4 = f(x + dt * k3)
            x = x + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(x)):
                raise NumericFailure(f"state blew up at step {k}")
            out[:, k] = x
    return Trajectory(out, dt)


def nls_grid(spec: Nls) -> np.ndarray:
    """Periodic spatial grid (right endpoint excluded)."""
    n, half = spec.n_grid, spec.x_half_width
    return -half + 2.0 * half * np.arange(n) / n


def simulate_nls(spec: Nls, u0=None, substeps: int | None = None) -> Trajectory:
    """Strang split-step Fourier integration of the focusing cubic
    Schrodinger equation.

    The returned trajectory stacks the real parts of the field on the
    grid followed by the imaginary parts (2 * n_grid channels). Both
    split sub-flows preserve the discrete L2 norm exactly, so the norm is
    monitored purely as an integration sanity check.
    """
    x = nls_grid(spec)
    dx = x[1] - x[0]
    if u0 is None:
        u = 2.0 / np.cosh(x)
    elif callable(u0):
        u = np.asarray(u0(x), dtype=complex)
    else:
        u = np.asarray(u0, dtype=complex)
        if u.shape != x.shape:
            raise ContractError("initial field does not match the grid")
    u = u.astype(complex)

    n_snap = spec.n_snapshots
    dt_snap = spec.t_final / (n_snap - 1)
    if substeps is None:
        substeps = max(1, math.ceil(dt_snap / 2e-3))
    h = dt_snap / substeps

    k = 2.0 * np.pi * np.fft.fftfreq(spec.n_grid, d=dx)
    linear_phase = np.exp(-0.5j * k**2 * h)

    out = np.empty((2 * spec.n_grid, n_snap))
    out[: spec.n_grid, 0] = u.real
    out[spec.n_grid :, 0] = u.imag
    norm0 = math.sqrt(float(np.sum(np.abs(u) ** 2)) * dx)

    for m in range(1, n_snap):
        for _ in range(substeps):
            u = u * np.exp(0.5j * h * np.abs(u) ** 2)
            u = np.fft.ifft(linear_phase * np.fft.fft(u))
            u = u * np.exp(0.5j * h * np.abs(u) ** 2)
        norm = math.sqrt(float(np.sum(np.abs(u) ** 2)) * dx)
        if not math.isfinite(norm) or abs(norm - norm0) > 1e-4 * norm0:
            raise NumericFailure(
                f"norm drift {abs(norm - norm0) / norm0:.3e} at snapshot {m}"
            )
        out[: spec.n_grid, m] = u.real
        out[spec.n_grid :, m] = u.imag
    return Trajectory(out, dt_snap)


def vdp_asymptotic(mu: float, t):
    """Weakly nonlinear frequency-corrected approximation of the Van der
    Pol limit cycle.

    Returns (x, omega) with omega = 1 + 7 mu^2 / 16 and
    x(t) = 2 cos(omega t) + mu (3/4 sin(omega t) - 1/4 sin(3 omega t)),
    valid to first order for small mu.
    """
    if not 0.0 <= mu <= 0.5:
        raise ContractError("asymptotic expansion is valid for 0 <= mu <= 0.5")
    omega = 1.0 + 7.0 * mu**2 / 16.0
    t = np.asarray(t, dtype=float)
    x = 2.0 * np.cos(omega * t) + mu * (
        0.75 * np.sin(omega * t) - 0.25 * np.sin(3.0 * omega * t)
    )
    if x.ndim == 0:
        return float(x), omega
    return x, omega
