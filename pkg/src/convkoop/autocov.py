"""Fast window-basis construction from the autocovariance matrix.

The window functions are the eigenvectors of H H^T. Instead of forming
that product (N^2 inner products of length M), the autocovariance of a
statistically stationary signal depends on the lag only and expands as

    A_jk(p, q) = sum_n ((p - q) dt)^n / n! * mean(x_j x_k^(n)),

so n_max + 1 inner products per channel pair suffice. The exact product
is kept alongside as the reference path. Only the window side comes out
of this route; coordinate time series are obtained afterwards by
projection (``conv_coordinates``).
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .embedding import HankelMatrix, SvdBasis, _canonicalize_signs
from .exceptions import ContractError, NumericFailure
from .numerics import finite_diff
from .systems import Trajectory


@dataclass(frozen=True)
class Autocovariance:
    """Symmetric (D*N, D*N) window autocovariance in delay-major layout.

    ``taylor_order`` is None for the exact H H^T path.
    """

    matrix: np.ndarray
    n_delays: int
    n_channels: int
    dt: float
    taylor_order: int | None = None

    @property
    def tau(self) -> float:
        return (self.n_delays - 1) * self.dt / 2.0

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def autocov_exact(hankel: HankelMatrix) -> Autocovariance:
    """Exact autocovariance H @ H.T, explicitly symmetrized."""
    a = hankel.data @ hankel.data.T
    a = 0.5 * (a + a.T)
    return Autocovariance(a, hankel.n_delays, hankel.n_channels, hankel.dt, None)


def autocov_taylor(traj: Trajectory, n_delays: int, n_max: int) -> Autocovariance:
    """Taylor-expanded autocovariance from lag-zero moments.

    Derivatives come from repeated finite differencing; every moment is
    averaged over the same interior sample range (where no one-sided
    boundary stencil of any pass reaches), matching the infinite-horizon
    averages the expansion assumes. The result is scaled to be comparable
    with the exact H H^T (sum over windows rather than a mean).
    """
    if not 0 <= n_max <= 8:
        raise ContractError("taylor order must be between 0 and 8")
    if n_delays < 2:
        raise ContractError("need at least 2 delays")
    x = traj.samples
    d, m_traj = x.shape
    margin = 2 * n_max
    lo, hi = margin, m_traj - margin
    if hi - lo < max(5, n_delays):
        raise ContractError(
            f"trajectory too short for order-{n_max} derivatives "
            f"(interior region has {hi - lo} samples)"
        )

    derivs = [x]
    for _ in range(n_max):
        derivs.append(finite_diff(derivs[-1], traj.dt, axis=1))

    n_windows = m_traj - n_delays + 1
    moments = np.empty((n_max + 1, d, d))
    base = x[:, lo:hi]
    for n in range(n_max + 1):
        moments[n] = base @ derivs[n][:, lo:hi].T / (hi - lo)
    moments *= n_windows

    lag = np.subtract.outer(np.arange(n_delays), np.arange(n_delays)) * traj.dt
    a4 = np.zeros((n_delays, d, n_delays, d))
    for n in range(n_max + 1):
        a4 += (lag**n / math.factorial(n))[:, None, :, None] * moments[n][None, :, None, :]
    a = a4.reshape(n_delays * d, n_delays * d)
    a = 0.5 * (a + a.T)
    return Autocovariance(a, n_delays, d, traj.dt, n_max)


def basis_from_autocov(acov: Autocovariance, r: int) -> SvdBasis:
    """Window basis from the symmetric eigendecomposition of the
    autocovariance: sigma_k = sqrt(max(lambda_k, 0)).

    No time-side factors are produced (``v`` is None); project the
    trajectory afterwards for coordinate series. Small negative
    eigenvalue ripples (a Taylor-truncation artifact) are clamped and
    reported; a strongly indefinite matrix is an error.
    """
    a = acov.matrix
    if not np.allclose(a, a.T, atol=1e-10 * max(np.abs(a).max(), 1.0)):
        raise ContractError("autocovariance must be symmetric")
    if not 1 <= r <= acov.size:
        raise ContractError(f"rank {r} out of range for size {acov.size}")
    evals, evecs = np.linalg.eigh(a)
    evals = evals[::-1]
    evecs = evecs[:, ::-1]
    top = evals[0]
    if top <= 0:
        raise NumericFailure("autocovariance has no positive spectrum")
    most_negative = float(evals[-1])
    if most_negative < -0.1 * top:
        raise NumericFailure(
            f"autocovariance is indefinite beyond tolerance "
            f"(lambda_min/lambda_1 = {most_negative / top:.3e})"
        )
    if most_negative < -1e-10 * top:
        warnings.warn(
            f"negative autocovariance ripples clamped to zero "
            f"(lambda_min/lambda_1 = {most_negative / top:.3e})",
            RuntimeWarning,
            stacklevel=2,
        )
    sigma = np.sqrt(np.clip(evals[:r], 0.0, None))
    if sigma[-1] <= 0:
        raise ContractError(
            f"requested rank {r} exceeds the numerically nonzero spectrum"
        )
    u, _ = _canonicalize_signs(evecs[:, :r].copy(), None)
    return SvdBasis(u, sigma, None, acov.n_delays, acov.n_channels, acov.dt)
