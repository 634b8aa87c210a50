"""Dense linear-algebra and calculus primitives used by every other module.

Thin, contract-checked wrappers around LAPACK (via numpy) plus hand-rolled
finite-difference stencils and trapezoid quadrature. All functions are pure
and all returned arrays are freshly allocated.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ContractError, NumericFailure


@dataclass(frozen=True)
class SvdFactors:
    """Truncated SVD triple: ``a ~ u @ diag(sigma) @ v.T``.

    ``u`` is (m, r) and ``v`` is (n, r), both with orthonormal columns;
    ``sigma`` is length r, nonnegative and descending.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    @property
    def rank(self) -> int:
        return self.sigma.shape[0]


@dataclass(frozen=True)
class EigDecomposition:
    """Eigenvalues (sorted) and matching right eigenvectors as columns."""

    values: np.ndarray
    vectors: np.ndarray


def require_finite(arr, name="input"):
    if not np.all(np.isfinite(arr)):
        raise ContractError(f"{name} contains non-finite entries")


def truncated_svd(a, r: int) -> SvdFactors:
    """SVD keeping the ``r`` largest singular values.

    Raises ContractError when ``r`` is outside [1, min(m, n)] or the input
    is not finite.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ContractError("truncated_svd expects a 2-D matrix")
    require_finite(a, "matrix")
    if not 1 <= r <= min(a.shape):
        raise ContractError(
            f"rank {r} out of range for a {a.shape[0]}x{a.shape[1]} matrix"
        )
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericFailure(f"SVD did not converge: {exc}") from exc
    return SvdFactors(u[:, :r].copy(), s[:r].copy(), vt[:r].T.copy())


def eig(m) -> EigDecomposition:
    """Eigendecomposition with a deterministic ordering.

    Eigenvalues are sorted by descending imaginary part, ties broken by
    descending real part, remaining ties by input position.
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ContractError("eig expects a square matrix")
    require_finite(m, "matrix")
    try:
        values, vectors = np.linalg.eig(m)
    except np.linalg.LinAlgError as exc:
        raise NumericFailure(f"eigendecomposition did not converge: {exc}") from exc
    order = np.lexsort((-values.real, -values.imag))
    return EigDecomposition(values[order], vectors[:, order])


def pseudoinverse(a, tol: float = 1e-12) -> np.ndarray:
    """Moore-Penrose pseudoinverse; singular values below ``tol * sigma_1``
    are treated as exactly zero."""
    a = np.asarray(a, dtype=float)
    require_finite(a, "matrix")
    if tol < 0:
        raise ContractError("tolerance must be nonnegative")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    cut = tol * s[0] if s.size and s[0] > 0 else 0.0
    inv = np.where(s > cut, np.divide(1.0, s, where=s > 0), 0.0)
    return (vt.T * inv) @ u.T


_INTERIOR = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
# one-sided 4th-order stencils for the first two points (mirror for the last two)
_EDGE0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_EDGE1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0


def finite_diff(series, dt: float, axis: int = -1) -> np.ndarray:
    """Fourth-order finite-difference derivative of uniformly sampled data.

    Central five-point stencil in the interior, one-sided five-point
    stencils at the two samples nearest each boundary. Error is O(dt^4)
    for smooth inputs.
    """
    series = np.asarray(series, dtype=float)
    if dt <= 0:
        raise ContractError("dt must be positive")
    x = np.moveaxis(series, axis, -1)
    n = x.shape[-1]
    if n < 5:
        raise ContractError("finite_diff needs at least 5 samples")
    out = np.empty_like(x)
    out[..., 2:-2] = (
        x[..., :-4] * _INTERIOR[0]
        + x[..., 1:-3] * _INTERIOR[1]
        + x[..., 3:-1] * _INTERIOR[3]
        + x[..., 4:] * _INTERIOR[4]
    )
    head = x[..., :5]
    tail = x[..., -5:]
    out[..., 0] = head @ _EDGE0
    out[..., 1] = head @ _EDGE1
    out[..., -2] = -(tail @ _EDGE1[::-1])
    out[..., -1] = -(tail @ _EDGE0[::-1])
    out /= dt
    return np.moveaxis(out, -1, axis)


def trapezoid_weights(n: int, ds: float) -> np.ndarray:
    """Composite trapezoid weights for ``n`` uniform samples spaced ``ds``."""
    if n < 2:
        raise ContractError("trapezoid weights need at least 2 samples")
    w = np.full(n, ds)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


_GREGORY_EDGE = np.array([3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0])


def end_corrected_weights(n: int, ds: float) -> np.ndarray:
    """Gregory end-corrected trapezoid weights (fourth order) for ``n``
    uniform samples spaced ``ds``.

    Same total weight as the trapezoid rule but with O(ds^4) error for
    smooth non-periodic integrands, which keeps projections onto
    high-order polynomial filters (steep at the window edges) clean.
    """
    if n < 7:
        raise ContractError("end-corrected weights need at least 7 samples")
    w = np.full(n, ds)
    w[:3] = _GREGORY_EDGE * ds
    w[-3:] = _GREGORY_EDGE[::-1] * ds
    return w


def quad_inner(f, g, ds: float) -> float:
    """Trapezoid approximation of the inner product integral of ``f * g``.

    Exact whenever the product is piecewise linear between samples.
    """
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape or f.ndim != 1:
        raise ContractError("quad_inner expects two equal-length 1-D arrays")
    if f.shape[0] < 2:
        raise ContractError("quad_inner needs at least 2 samples")
    prod = f * g
    return float(ds * (prod.sum() - 0.5 * prod[0] - 0.5 * prod[-1]))
