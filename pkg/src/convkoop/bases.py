"""Analytic orthonormal filter bases on a symmetric window [-tau, tau].

Provides the real trigonometric and rescaled Legendre bases together with
closed-form generator matrices (the matrices of inner products between
basis functions and the derivatives of basis functions), plus the sampled
``BasisSpec`` container shared with data-driven window bases.

Conventions
-----------
* Basis functions are L2-orthonormal on [-tau, tau].
* Sampled specs live on a uniform grid including both endpoints, each
  carrying the quadrature weights that suit it: plain trapezoid for the
  trigonometric kind (spectrally exact on full-period products), Gregory
  end-corrected trapezoid for the polynomial kind (whose filters are
  steep at the window edges), and uniform weights for data-driven kinds
  (under which the singular vectors are exactly orthonormal).
* High-accuracy checks (Gram matrices, generator cross-checks) for
  analytic kinds are evaluated on Gauss-Legendre nodes, where polynomial
  integrands are integrated exactly; the uniform trapezoid rule is kept
  for sampled-data paths only.
"""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ContractError
from .numerics import end_corrected_weights, trapezoid_weights

KIND_FOURIER = "fourier"
KIND_LEGENDRE = "legendre"
KIND_DATA = "data"
_ANALYTIC_KINDS = (KIND_FOURIER, KIND_LEGENDRE)


@dataclass(frozen=True)
class BasisSpec:
    """A sampled orthonormal filter basis on the window grid.

    ``values`` and ``derivs`` have shape (size, channels * n_points) with
    the delay-major layout used by Hankel matrices: flat index
    ``d + channels * n`` holds channel ``d`` at grid point ``n``.
    ``weights`` are the per-grid-point quadrature weights (spacing
    included) under which the sampled values are orthonormal.
    """

    kind: str
    size: int
    tau: float
    grid: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    weights: np.ndarray
    channels: int = 1
    token: str = ""

    @property
    def n_points(self) -> int:
        return self.grid.shape[0]

    def full_weights(self) -> np.ndarray:
        """Quadrature weights expanded to the delay-major flat layout."""
        return np.repeat(self.weights, self.channels)


def window_grid(n_points: int, dt: float) -> np.ndarray:
    """Symmetric uniform grid of ``n_points`` samples spaced ``dt``,
    centered on zero; spans [-tau, tau] with tau = (n_points - 1) * dt / 2."""
    if n_points < 2:
        raise ContractError("window grid needs at least 2 points")
    return (np.arange(n_points) - (n_points - 1) / 2.0) * dt


def _as_grid(grid, tau: float) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.shape[0] < 2:
        raise ContractError("grid must be a 1-D array of at least 2 points")
    if abs(grid[0] + tau) > 1e-9 * max(tau, 1.0) or abs(grid[-1] - tau) > 1e-9 * max(tau, 1.0):
        raise ContractError("grid must span [-tau, tau]")
    return grid


def fourier_values(r: int, tau: float, s) -> np.ndarray:
    """Real orthonormal trigonometric basis sampled at ``s``.

    Ordering: constant, then cos/sin pairs of increasing frequency
    n*pi/tau. Requires odd ``r``.
    """
    s = np.asarray(s, dtype=float)
    out = np.empty((r, s.shape[0]))
    out[0] = 1.0 / math.sqrt(2.0 * tau)
    scale = 1.0 / math.sqrt(tau)
    for n in range(1, (r - 1) // 2 + 1):
        arg = n * np.pi * s / tau
        out[2 * n - 1] = np.cos(arg) * scale
        out[2 * n] = np.sin(arg) * scale
    return out


def fourier_derivs(r: int, tau: float, s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    out = np.zeros((r, s.shape[0]))
    scale = 1.0 / math.sqrt(tau)
    for n in range(1, (r - 1) // 2 + 1):
        arg = n * np.pi * s / tau
        freq = n * np.pi / tau
        out[2 * n - 1] = -np.sin(arg) * scale * freq
        out[2 * n] = np.cos(arg) * scale * freq
    return out


def _legendre_raw(r: int, x) -> np.ndarray:
    """Legendre polynomials P_0..P_{r-1} via the three-term recurrence.

    Stable for all orders, unlike the explicit binomial sum whose
    coefficients overflow doubles near order 30.
    """
    x = np.asarray(x, dtype=float)
    p = np.empty((r, x.shape[0]))
    p[0] = 1.0
    if r > 1:
        p[1] = x
    for l in range(2, r):
        p[l] = ((2 * l - 1) * x * p[l - 1] - (l - 1) * p[l - 2]) / l
    return p


def _legendre_raw_derivs(r: int, x) -> np.ndarray:
    """Derivatives via P'_l = P'_{l-2} + (2l - 1) P_{l-1} (valid for all x)."""
    x = np.asarray(x, dtype=float)
    p = _legendre_raw(r, x)
    dp = np.empty_like(p)
    dp[0] = 0.0
    if r > 1:
        dp[1] = 1.0
    for l in range(2, r):
        dp[l] = dp[l - 2] + (2 * l - 1) * p[l - 1]
    return dp


def _legendre_scale(r: int, tau: float) -> np.ndarray:
    return np.sqrt((2.0 * np.arange(r) + 1.0) / (2.0 * tau))


def legendre_values(r: int, tau: float, s) -> np.ndarray:
    """Rescaled Legendre basis P_l(s/tau) * sqrt((2l+1)/(2 tau)),
    orthonormal on [-tau, tau]."""
    s = np.asarray(s, dtype=float)
    return _legendre_raw(r, s / tau) * _legendre_scale(r, tau)[:, None]


def legendre_derivs(r: int, tau: float, s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    return _legendre_raw_derivs(r, s / tau) * (_legendre_scale(r, tau) / tau)[:, None]


def legendre_binomial_coeffs(l: int):
    """Monomial expansion of the orthonormal Legendre function of order
    ``l``: returns (C_l, B) with phi_l(s) = C_l * sum_k B[k] * (s/tau')^(l-2k)
    in the normalized variable; kept only as a low-order cross-check
    oracle (binomial terms overflow doubles near l = 30)."""
    if l > 20:
        raise ContractError("binomial expansion is only stable for l <= 20")
    c_l = math.sqrt((2 * l + 1) / 2.0) / 2.0**l
    b = np.array(
        [
            (-1) ** k * math.comb(l, k) * math.comb(2 * l - 2 * k, l)
            for k in range(l // 2 + 1)
        ],
        dtype=float,
    )
    return c_l, b


def fourier_basis(r: int, tau: float, grid=None) -> BasisSpec:
    """Sampled real trigonometric basis; ``r`` must be odd (constant plus
    full cos/sin pairs)."""
    if r < 1 or r % 2 == 0:
        raise ContractError("fourier basis size must be odd (constant + pairs)")
    if tau <= 0:
        raise ContractError("tau must be positive")
    if grid is None:
        grid = window_grid(257, 2.0 * tau / 256.0)
    grid = _as_grid(grid, tau)
    ds = grid[1] - grid[0]
    return BasisSpec(
        kind=KIND_FOURIER,
        size=r,
        tau=tau,
        grid=grid,
        values=fourier_values(r, tau, grid),
        derivs=fourier_derivs(r, tau, grid),
        weights=trapezoid_weights(grid.shape[0], ds),
        channels=1,
        token=f"fourier:r={r}:tau={tau:.12g}",
    )


def legendre_basis(r: int, tau: float, grid=None) -> BasisSpec:
    """Sampled rescaled Legendre basis of size ``r``."""
    if r < 1:
        raise ContractError("basis size must be at least 1")
    if tau <= 0:
        raise ContractError("tau must be positive")
    if grid is None:
        grid = window_grid(257, 2.0 * tau / 256.0)
    grid = _as_grid(grid, tau)
    ds = grid[1] - grid[0]
    return BasisSpec(
        kind=KIND_LEGENDRE,
        size=r,
        tau=tau,
        grid=grid,
        values=legendre_values(r, tau, grid),
        derivs=legendre_derivs(r, tau, grid),
        weights=end_corrected_weights(grid.shape[0], ds),
        channels=1,
        token=f"legendre:r={r}:tau={tau:.12g}",
    )


def fourier_generator(r: int, tau: float) -> np.ndarray:
    """Closed-form generator matrix for the real trigonometric basis:
    antisymmetric 2x2 blocks [[0, n pi/tau], [-n pi/tau, 0]] per frequency,
    zero row and column for the constant."""
    if r < 1 or r % 2 == 0:
        raise ContractError("fourier basis size must be odd")
    k = np.zeros((r, r))
    for n in range(1, (r - 1) // 2 + 1):
        w = n * np.pi / tau
        k[2 * n - 1, 2 * n] = w
        k[2 * n, 2 * n - 1] = -w
    return k


def legendre_generator(r: int, tau: float) -> np.ndarray:
    """Closed-form generator matrix for the orthonormal Legendre basis:
    sqrt((2j+1)(2k+1))/tau for j < k with j + k odd, zero otherwise
    (strictly upper triangular with a checkerboard zero pattern)."""
    j = np.arange(r)[:, None]
    k = np.arange(r)[None, :]
    mask = (j < k) & ((j + k) % 2 == 1)
    return np.where(mask, np.sqrt((2.0 * j + 1.0) * (2.0 * k + 1.0)) / tau, 0.0)


def gauss_grid(tau: float, n_nodes: int):
    """Gauss-Legendre nodes and weights rescaled to [-tau, tau]."""
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    return x * tau, w * tau


def _analytic_eval(kind: str, r: int, tau: float, s):
    if kind == KIND_FOURIER:
        return fourier_values(r, tau, s), fourier_derivs(r, tau, s)
    if kind == KIND_LEGENDRE:
        return legendre_values(r, tau, s), legendre_derivs(r, tau, s)
    raise ContractError(f"no analytic evaluator for basis kind '{kind}'")


def generator_by_quadrature(kind: str, r: int, tau: float, n_nodes: int | None = None) -> np.ndarray:
    """Generator matrix computed by Gauss-Legendre quadrature of the
    analytically evaluated basis; the independent cross-check for the
    closed forms (exact for polynomial integrands)."""
    if n_nodes is None:
        n_nodes = max(80, 6 * r)
    s, w = gauss_grid(tau, n_nodes)
    vals, ders = _analytic_eval(kind, r, tau, s)
    return (vals * w) @ ders.T


def gram_by_quadrature(kind: str, r: int, tau: float, n_nodes: int | None = None) -> np.ndarray:
    if n_nodes is None:
        n_nodes = max(80, 6 * r)
    s, w = gauss_grid(tau, n_nodes)
    vals, _ = _analytic_eval(kind, r, tau, s)
    return (vals * w) @ vals.T


def gram_check(basis: BasisSpec) -> float:
    """Largest deviation of the basis Gram matrix from the identity.

    Analytic kinds are integrated on Gauss-Legendre nodes; data-driven
    kinds use their own grid and weights (under which the singular
    vectors are orthonormal by construction).
    """
    if basis.kind in _ANALYTIC_KINDS:
        gram = gram_by_quadrature(basis.kind, basis.size, basis.tau)
    else:
        w = basis.full_weights()
        gram = (basis.values * w) @ basis.values.T
    return float(np.abs(gram - np.eye(basis.size)).max())
