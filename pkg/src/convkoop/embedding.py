"""Hankel delay embedding, truncated SVD window bases, and evaluation /
reconstruction of convolutional coordinates.

Windows are centered: Hankel column m is the window of 2*tau seconds
centered at t0 + (m + (N-1)/2) * dt, and window grids span [-tau, tau]
with tau = (N - 1) * dt / 2. Coordinate time stamps always refer to
window centers. Only full windows are used (no padding), so a trajectory
of M_traj samples yields M_traj - N + 1 columns.

Normalization: the discrete SVD factors have unit-norm columns in the
plain (unweighted) Euclidean sense. The continuous theory wants window
functions with unit L2 norm on [-tau, tau]; the conversion is the single
1/sqrt(dt) rescale applied in ``basis_from_svd``, and coordinate series
always store the continuous normalization (so an SVD coordinate series
equals sigma_continuous * v_continuous exactly).
"""

import hashlib
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .bases import KIND_DATA, BasisSpec, window_grid
from .exceptions import ContractError, NumericFailure
from .numerics import finite_diff, require_finite
from .systems import Trajectory


@dataclass(frozen=True)
class HankelMatrix:
    """Block-row delay embedding: row d + D*n holds channel d at delay n."""

    data: np.ndarray
    n_delays: int
    n_channels: int
    dt: float
    t0: float = 0.0

    @property
    def n_cols(self) -> int:
        return self.data.shape[1]

    @property
    def tau(self) -> float:
        return (self.n_delays - 1) * self.dt / 2.0


@dataclass(frozen=True)
class SvdBasis:
    """Truncated SVD of a Hankel matrix, sign-canonicalized.

    ``u`` is (D*N, r): sampled window functions (unit Euclidean columns).
    ``v`` is (M, r) or None when produced by the autocovariance fast path.
    ``sigma`` uses the same discrete normalization as ``u`` and ``v``.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray | None
    n_delays: int
    n_channels: int
    dt: float
    t0: float = 0.0
    sign_canonical: bool = True

    @property
    def rank(self) -> int:
        return self.sigma.shape[0]

    @property
    def tau(self) -> float:
        return (self.n_delays - 1) * self.dt / 2.0

    @property
    def grid(self) -> np.ndarray:
        return window_grid(self.n_delays, self.dt)

    @property
    def sigma_continuous(self) -> np.ndarray:
        """Singular values in the L2([-tau,tau]) x L2([0,T]) normalization."""
        return self.sigma * self.dt

    def v_continuous(self) -> np.ndarray:
        if self.v is None:
            raise ContractError("this basis carries no time-side factors")
        return self.v / np.sqrt(self.dt)

    def token(self) -> str:
        """Identity of the underlying window basis; shared by truncations
        of one decomposition (hash over the top singular value)."""
        digest = hashlib.sha1(np.ascontiguousarray(self.sigma[:1]).tobytes()).hexdigest()
        return f"svd:N={self.n_delays}:D={self.n_channels}:{digest[:12]}"

    def truncate(self, r: int) -> "SvdBasis":
        if not 1 <= r <= self.rank:
            raise ContractError(f"cannot truncate rank {self.rank} basis to {r}")
        return SvdBasis(
            self.u[:, :r],
            self.sigma[:r],
            None if self.v is None else self.v[:, :r],
            self.n_delays,
            self.n_channels,
            self.dt,
            self.t0,
            self.sign_canonical,
        )


@dataclass(frozen=True)
class CoordinateSeries:
    """Time series of convolutional coordinates, continuous-normalized;
    ``t0`` is the time of the first window center."""

    values: np.ndarray
    dt: float
    t0: float = 0.0

    @property
    def rank(self) -> int:
        return self.values.shape[0]

    @property
    def n_samples(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_samples)


def build_hankel(traj: Trajectory, n_delays: int) -> HankelMatrix:
    """Materialize the block-Hankel matrix of a trajectory."""
    if n_delays < 2:
        raise ContractError("need at least 2 delays")
    if traj.n_samples < n_delays + 1:
        raise ContractError(
            f"trajectory of {traj.n_samples} samples is too short for "
            f"{n_delays} delays"
        )
    d = traj.channels
    m = traj.n_samples - n_delays + 1
    data = np.empty((d * n_delays, m))
    for n in range(n_delays):
        data[n * d : (n + 1) * d] = traj.samples[:, n : n + m]
    return HankelMatrix(data, n_delays, d, traj.dt, traj.t0)


def _canonicalize_signs(u: np.ndarray, v: np.ndarray | None):
    """Flip each window-side column so its largest-magnitude entry is
    positive (time side flipped to match); makes SVD output deterministic."""
    for j in range(u.shape[1]):
        idx = int(np.argmax(np.abs(u[:, j])))
        if u[idx, j] < 0:
            u[:, j] = -u[:, j]
            if v is not None:
                v[:, j] = -v[:, j]
    return u, v


DEAD_SPECTRUM_RATIO = 100 * np.finfo(float).eps


def svd_coordinates(hankel: HankelMatrix, r: int) -> SvdBasis:
    """Truncated SVD of a Hankel matrix as a window basis.

    Refuses ranks that reach into the numerically zero part of the
    spectrum. Dense SVD values are accurate to eps * sigma_1 in absolute
    terms, so the cutoff sits at 100 eps relative; analytic windows of
    smooth flows genuinely use the decades below 1e-12.
    """
    data = hankel.data
    if not 1 <= r <= min(data.shape):
        raise ContractError(f"rank {r} out of range for {data.shape}")
    u, s, vt = np.linalg.svd(data, full_matrices=False)
    if s[r - 1] <= DEAD_SPECTRUM_RATIO * s[0]:
        raise ContractError(
            f"requested rank {r} exceeds the numerically nonzero spectrum "
            f"(sigma_{r}/sigma_1 = {s[r - 1] / s[0]:.3e})"
        )
    u, v = _canonicalize_signs(u[:, :r].copy(), vt[:r].T.copy())
    return SvdBasis(
        u, s[:r].copy(), v, hankel.n_delays, hankel.n_channels, hankel.dt, hankel.t0
    )


def _hankel_gram(traj: Trajectory, n_delays: int) -> np.ndarray:
    """H @ H.T computed from lagged cumulative sums without materializing
    H; O(D^2 N M) instead of O((DN)^2 M)."""
    x = traj.samples
    d, m_traj = x.shape
    n = n_delays
    m = m_traj - n + 1
    gram = np.empty((d * n, d * n))
    for ch_a in range(d):
        for ch_b in range(d):
            for lag in range(n):
                prod = x[ch_a, lag:] * x[ch_b, : m_traj - lag]
                csum = np.cumsum(prod)
                n_q = n - lag
                q = np.arange(n_q)
                upper = csum[q + m - 1]
                lower = np.where(q > 0, csum[np.maximum(q - 1, 0)], 0.0)
                vals = upper - lower
                rows = ch_a + d * (q + lag)
                cols = ch_b + d * q
                gram[rows, cols] = vals
                gram[cols, rows] = vals
    return gram


def project_windows(traj: Trajectory, kernels: np.ndarray, n_delays: int,
                    chunk: int = 8192) -> np.ndarray:
    """Inner products of every length-N window with each kernel row.

    ``kernels`` is (r, D*N) in delay-major layout; returns (r, M) with
    M = n_samples - N + 1. Equivalent to ``kernels @ H`` without
    materializing the Hankel matrix.
    """
    d = traj.channels
    n = n_delays
    if kernels.ndim != 2 or kernels.shape[1] != d * n:
        raise ContractError("kernel layout does not match the window size")
    m = traj.n_samples - n + 1
    if m < 1:
        raise ContractError("trajectory too short for the window")
    out = np.zeros((kernels.shape[0], m))
    for ch in range(d):
        kd = np.ascontiguousarray(kernels[:, ch::d])
        view = sliding_window_view(traj.samples[ch], n)
        for start in range(0, m, chunk):
            stop = min(start + chunk, m)
            out[:, start:stop] += kd @ view[start:stop].T
    return out


def svd_basis_from_trajectory(
    traj: Trajectory, n_delays: int, r: int, method: str = "auto"
) -> SvdBasis:
    """Window SVD basis straight from a trajectory.

    ``method`` is "direct" (materialize the Hankel matrix and run a dense
    SVD), "gram" (eigendecomposition of H H^T built from lagged sums;
    preferable when M >> D*N), or "auto".
    """
    if n_delays < 2 or traj.n_samples < n_delays + 1:
        raise ContractError("trajectory too short for the requested window")
    dn = traj.channels * n_delays
    m = traj.n_samples - n_delays + 1
    if method == "auto":
        # direct whenever the dense SVD is affordable: it resolves singular
        # values all the way to eps * sigma_1, while the normal-equations
        # route bottoms out near sqrt(eps) * sigma_1
        direct_cost = min(dn, m) ** 2 * max(dn, m)
        method = "direct" if direct_cost <= 5e10 else "gram"
    if method == "direct":
        return svd_coordinates(build_hankel(traj, n_delays), r)
    if method != "gram":
        raise ContractError(f"unknown method '{method}'")

    gram = _hankel_gram(traj, n_delays)
    evals, evecs = np.linalg.eigh(gram)
    evals = evals[::-1]
    evecs = evecs[:, ::-1]
    if evals[r - 1] <= 1e-24 * max(evals[0], 0.0) or evals[r - 1] <= 0:
        raise ContractError(
            f"requested rank {r} exceeds the numerically nonzero spectrum"
        )
    sigma = np.sqrt(evals[:r])
    u = evecs[:, :r].copy()
    v = project_windows(traj, (u / sigma).T, n_delays).T
    # one polar correction pass keeps the time side orthonormal even when
    # sigma_r / sigma_1 is small enough for squaring to cost digits
    vv = v.T @ v
    if np.abs(vv - np.eye(r)).max() > 1e-12:
        w, p = np.linalg.eigh(vv)
        if w[0] <= 0:
            raise NumericFailure("time-side factors collapsed; lower the rank")
        v = v @ (p / np.sqrt(w)) @ p.T
    u, v = _canonicalize_signs(u, v)
    return SvdBasis(u, sigma, v, n_delays, traj.channels, traj.dt, traj.t0)


def basis_from_svd(svd_basis: SvdBasis) -> BasisSpec:
    """Reinterpret a discrete SVD window basis as a sampled filter basis.

    This is the one place the discrete-to-continuous rescale happens:
    sampled values are u / sqrt(dt) (unit L2 norm on [-tau, tau]) and the
    quadrature weights are uniform (dt), under which the sampled values
    are exactly orthonormal. Derivatives use the finite-difference
    stencils along the window.
    """
    r = svd_basis.rank
    d = svd_basis.n_channels
    n = svd_basis.n_delays
    values = (svd_basis.u / np.sqrt(svd_basis.dt)).T
    per_channel = values.reshape(r, n, d)
    derivs = finite_diff(np.moveaxis(per_channel, 1, 2), svd_basis.dt, axis=2)
    derivs = np.moveaxis(derivs, 2, 1).reshape(r, n * d)
    return BasisSpec(
        kind=KIND_DATA,
        size=r,
        tau=svd_basis.tau,
        grid=svd_basis.grid,
        values=values,
        derivs=derivs,
        weights=np.full(n, svd_basis.dt),
        channels=d,
        token=svd_basis.token(),
    )


def conv_coordinates(traj: Trajectory, basis: BasisSpec, n_delays: int) -> CoordinateSeries:
    """Convolutional coordinates of a trajectory for a sampled basis:
    w_j(t) = sum_n weights_n * phi_j(s_n) . g(x(t + s_n)).

    The basis must be sampled on the same window grid (N points, spacing
    dt, same channel count).
    """
    if basis.n_points != n_delays:
        raise ContractError(
            f"basis grid has {basis.n_points} points, window has {n_delays}"
        )
    if basis.channels != traj.channels:
        raise ContractError(
            f"basis has {basis.channels} channels, trajectory has {traj.channels}"
        )
    expected_tau = (n_delays - 1) * traj.dt / 2.0
    if abs(basis.tau - expected_tau) > 1e-9 * max(expected_tau, traj.dt):
        raise ContractError(
            f"basis window tau={basis.tau} does not match trajectory window "
            f"tau={expected_tau}"
        )
    kernels = basis.values * basis.full_weights()
    values = project_windows(traj, kernels, n_delays)
    t_center = traj.t0 + (n_delays - 1) * traj.dt / 2.0
    return CoordinateSeries(values, traj.dt, t_center)


def normalized_coordinates(svd_basis: SvdBasis) -> CoordinateSeries:
    """Normalized principal-component series v_j(t) (unit L2 norm over
    the sampled horizon); the coordinates a window-SVD generator model
    propagates. The scaled convolutional coordinates are
    sigma_continuous * v."""
    if svd_basis.v is None:
        raise ContractError("this basis carries no time-side factors")
    t_center = svd_basis.t0 + (svd_basis.n_delays - 1) * svd_basis.dt / 2.0
    return CoordinateSeries(svd_basis.v_continuous().T, svd_basis.dt, t_center)


def reconstruct_window(coords, basis: BasisSpec) -> np.ndarray:
    """Window samples sum_j w_j phi_j(s_n) from one coordinate vector;
    returns the delay-major flat layout (D*N,)."""
    coords = np.asarray(coords, dtype=float)
    if coords.ndim != 1 or coords.shape[0] > basis.size:
        raise ContractError("coordinate count exceeds the basis size")
    require_finite(coords, "coordinates")
    return coords @ basis.values[: coords.shape[0]]
