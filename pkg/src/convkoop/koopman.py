"""Finite-dimensional Koopman representations on convolutional coordinates.

Covers the analytic generator built from a filter basis alone, discrete
shift maps for analytically continuable bases, least-squares / DMD
estimators on snapshot data, window-basis models with the window-side
cross-check, Koopman eigenfunctions and eigenfilters, forecasting, and
the structural diagnostics (truncation error bound, antisymmetry defect,
eigenvalue interlacing, coefficient growth).

Discrete-time and continuous-time (generator) models are never mixed
implicitly: a model carries its ``kind`` and conversions go through the
principal branch of the logarithm, failing loudly on the branch cut.
"""

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import bases
from .bases import BasisSpec
from .embedding import CoordinateSeries, SvdBasis, basis_from_svd, conv_coordinates
from .exceptions import ContractError, NumericFailure
from .numerics import (
    EigDecomposition,
    eig,
    finite_diff,
    require_finite,
    truncated_svd,
)

KIND_GENERATOR = "generator"
KIND_DISCRETE = "discrete"


@dataclass(frozen=True)
class KoopmanModel:
    """A finite-dimensional linear model of observable dynamics.

    ``operator`` is the generator matrix (d/dt w = operator @ w) for kind
    "generator", or the one-step map (w_{k+1} = operator @ w_k) for kind
    "discrete". ``eig`` is its eigendecomposition, ``amplitudes`` the
    initial-condition coordinates in the eigenbasis (when available), and
    ``modes`` the ambient-space DMD modes for snapshot-based models.
    """

    operator: np.ndarray
    kind: str
    dt: float
    eig: EigDecomposition
    amplitudes: np.ndarray | None = None
    basis_ref: str | None = None
    modes: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def rank(self) -> int:
        return self.operator.shape[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.eig.values

    @property
    def eigenvectors(self) -> np.ndarray:
        return self.eig.vectors

    def continuous_eigenvalues(self) -> np.ndarray:
        """Generator eigenvalues; discrete eigenvalues are mapped through
        the principal branch log(lambda) / dt."""
        if self.kind == KIND_GENERATOR:
            return self.eig.values
        lam = self.eig.values
        on_cut = (lam.real < 0) & (np.abs(lam.imag) <= 1e-14 * np.abs(lam.real))
        if np.any(on_cut):
            raise NumericFailure(
                "eigenvalue on the negative real axis; the principal-branch "
                "logarithm is ambiguous"
            )
        return np.log(lam) / self.dt


@dataclass(frozen=True)
class EigenfunctionSeries:
    """Sampled Koopman eigenfunction values b_j(x(t)) row per eigenvalue."""

    values: np.ndarray
    eigenvalues: np.ndarray
    dt: float
    t0: float = 0.0


def _model_from_operator(operator, kind, dt, amplitudes=None, basis_ref=None,
                         modes=None, diagnostics=None) -> KoopmanModel:
    decomposition = eig(operator)
    return KoopmanModel(
        operator=operator,
        kind=kind,
        dt=dt,
        eig=decomposition,
        amplitudes=amplitudes,
        basis_ref=basis_ref,
        modes=modes,
        diagnostics=diagnostics or {},
    )


def generator_from_basis(basis: BasisSpec) -> KoopmanModel:
    """Generator matrix K_jk = <phi_j, phi_k'> from the basis alone.

    The matrix depends only on the choice of filter basis, not on any
    trajectory. For the analytic kinds the closed form is returned after
    being checked against Gauss quadrature; for data-driven bases the
    sampled quadrature is used.
    """
    gram_defect = bases.gram_check(basis)
    if gram_defect > 1e-6:
        raise ContractError(
            f"basis is not orthonormal (gram defect {gram_defect:.3e})"
        )
    if basis.kind in (bases.KIND_FOURIER, bases.KIND_LEGENDRE):
        if basis.kind == bases.KIND_FOURIER:
            k = bases.fourier_generator(basis.size, basis.tau)
        else:
            k = bases.legendre_generator(basis.size, basis.tau)
        quad = bases.generator_by_quadrature(basis.kind, basis.size, basis.tau)
        gap = float(np.abs(k - quad).max())
        if gap > 1e-8:
            raise NumericFailure(
                f"closed-form generator disagrees with quadrature by {gap:.3e}"
            )
    else:
        k = (basis.values * basis.full_weights()) @ basis.derivs.T
    ds = basis.grid[1] - basis.grid[0]
    return _model_from_operator(
        k, KIND_GENERATOR, ds, basis_ref=basis.token or None,
        diagnostics={"gram_defect": gram_defect},
    )


def discrete_map_from_basis(basis: BasisSpec, delta_t: float) -> KoopmanModel:
    """One-step map M_jk = <phi_j(s), phi_k(s + delta_t)> using the
    analytic continuation of the basis beyond the window; only the
    trigonometric and Legendre kinds extend this way."""
    if basis.kind not in (bases.KIND_FOURIER, bases.KIND_LEGENDRE):
        raise ContractError(
            "data-driven bases have no analytic continuation beyond the window"
        )
    n_nodes = max(96, 6 * basis.size)
    s, w = bases.gauss_grid(basis.tau, n_nodes)
    if basis.kind == bases.KIND_FOURIER:
        vals = bases.fourier_values(basis.size, basis.tau, s)
        shifted = bases.fourier_values(basis.size, basis.tau, s + delta_t)
    else:
        vals = bases.legendre_values(basis.size, basis.tau, s)
        shifted = bases.legendre_values(basis.size, basis.tau, s + delta_t)
    m = (vals * w) @ shifted.T
    return _model_from_operator(m, KIND_DISCRETE, delta_t, basis_ref=basis.token or None)


def dmd(x1, x2, r: int, dt: float = 1.0) -> KoopmanModel:
    """Exact dynamic mode decomposition of one-step snapshot pairs.

    Fits the least-squares propagator x2 ~ K x1 projected on the leading
    ``r`` left singular vectors of x1, recovers the ambient modes, and
    solves for the amplitudes of the first snapshot.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x1.shape != x2.shape:
        raise ContractError("snapshot matrices must have identical shapes")
    if x1.ndim != 2 or x1.shape[1] < 2:
        raise ContractError("need at least 2 snapshot pairs")
    factors = truncated_svd(x1, r)
    if factors.sigma[-1] <= 1e-12 * factors.sigma[0]:
        raise ContractError(
            f"snapshot matrix is rank deficient below the requested rank {r}"
        )
    proj = factors.u.T @ x2 @ (factors.v / factors.sigma)
    decomposition = eig(proj)
    modes = x2 @ (factors.v / factors.sigma) @ decomposition.vectors
    amplitudes, *_ = np.linalg.lstsq(modes, x1[:, 0].astype(complex), rcond=None)
    return KoopmanModel(
        operator=proj,
        kind=KIND_DISCRETE,
        dt=dt,
        eig=decomposition,
        amplitudes=amplitudes,
        modes=modes,
    )


def poly_exponents(n_channels: int, degree: int):
    """Deterministic ordering of all monomial exponents with total degree
    <= ``degree``: by degree, then lexicographic in the channel indices."""
    exps = []
    for deg in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(n_channels), deg):
            e = [0] * n_channels
            for c in combo:
                e[c] += 1
            exps.append(tuple(e))
    return exps


def lift_snapshots(samples: np.ndarray, dictionary: str) -> np.ndarray:
    """Apply an observable dictionary to raw snapshots.

    Tags: "identity", "poly<k>" (all monomials of total degree <= k,
    constant included), and "nls-cubic" (stacked re/im field augmented
    with the cubic observable |u|^2 u).
    """
    samples = np.asarray(samples, dtype=float)
    if dictionary == "identity":
        return samples
    if dictionary.startswith("poly"):
        try:
            degree = int(dictionary[4:])
        except ValueError as exc:
            raise ContractError(f"bad dictionary tag '{dictionary}'") from exc
        exps = poly_exponents(samples.shape[0], degree)
        lifted = np.empty((len(exps), samples.shape[1]))
        for i, e in enumerate(exps):
            row = np.ones(samples.shape[1])
            for ch, p in enumerate(e):
                if p:
                    row = row * samples[ch] ** p
            lifted[i] = row
        if not np.all(np.isfinite(lifted)):
            raise NumericFailure(
                "overflow in high-degree monomial observables; lower the degree "
                "or rescale the data"
            )
        return lifted
    if dictionary == "nls-cubic":
        if samples.shape[0] % 2 != 0:
            raise ContractError("nls-cubic expects stacked re/im channels")
        half = samples.shape[0] // 2
        u = samples[:half] + 1j * samples[half:]
        cubic = (np.abs(u) ** 2) * u
        return np.vstack([samples, cubic.real, cubic.imag])
    raise ContractError(f"unknown observable dictionary '{dictionary}'")


def edmd(traj, dictionary: str, r: int, dt: float | None = None) -> KoopmanModel:
    """DMD on dictionary-lifted snapshots (the identity dictionary
    reduces to plain DMD)."""
    samples = traj.samples if hasattr(traj, "samples") else np.asarray(traj, dtype=float)
    if dt is None:
        dt = traj.dt if hasattr(traj, "dt") else 1.0
    lifted = lift_snapshots(samples, dictionary)
    model = dmd(lifted[:, :-1], lifted[:, 1:], r, dt=dt)
    diagnostics = dict(model.diagnostics)
    diagnostics["dictionary"] = dictionary
    diagnostics["lift_dim"] = lifted.shape[0]
    return KoopmanModel(
        operator=model.operator,
        kind=model.kind,
        dt=model.dt,
        eig=model.eig,
        amplitudes=model.amplitudes,
        basis_ref=model.basis_ref,
        modes=model.modes,
        diagnostics=diagnostics,
    )


def fit_generator_lstsq(values: np.ndarray, dt: float) -> np.ndarray:
    """Least-squares generator for a sampled coordinate series: the matrix
    T minimizing the summed squared error of T w(t) - w'(t), with
    derivatives from the finite-difference stencils.

    For series that are orthonormal in the plain Euclidean sense (the
    normalized window-SVD factors) this reduces to the inner products
    <w_j', w_k>, the same pairing the window-side route discretizes.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[1] < 5:
        raise ContractError("need a (rank, time) series of at least 5 samples")
    vdot = finite_diff(values, dt, axis=1)
    try:
        solution, *_ = np.linalg.lstsq(values.T, vdot.T, rcond=None)
    except np.linalg.LinAlgError as exc:
        raise NumericFailure(f"least-squares fit failed: {exc}") from exc
    return solution.T


def window_side_operator(svd_basis: SvdBasis) -> np.ndarray:
    """Window-side estimate (sigma_k / sigma_j) <u_j, u_k'> of the
    generator on normalized coordinates.

    The inner product uses the plain (uniform-weight) pairing under which
    the discrete window functions are exactly orthonormal; endpoint
    reweighting would break the discrete duality with the time side at
    first order in dt.
    """
    dt = svd_basis.dt
    u_cont = svd_basis.u / np.sqrt(dt)
    r = svd_basis.rank
    n, d = svd_basis.n_delays, svd_basis.n_channels
    per_channel = u_cont.T.reshape(r, n, d)
    du = finite_diff(np.moveaxis(per_channel, 1, 2), dt, axis=2)
    du = np.moveaxis(du, 2, 1).reshape(r, n * d).T
    k_window = u_cont.T @ du * dt
    return k_window * (svd_basis.sigma[None, :] / svd_basis.sigma[:, None])


def havok_model(svd_basis: SvdBasis) -> KoopmanModel:
    """Linear generator on normalized window-SVD coordinates, both routes.

    The stored operator is the time-side least-squares fit T of
    v'(t) = T v(t) on the normalized principal-component series (robust
    even with crowded spectra); it propagates the series returned by
    ``embedding.normalized_coordinates``. The window-side route
    (sigma_k / sigma_j) <u_j, u_k'> is computed as a cross-check and the
    largest entrywise gap is recorded in the diagnostics.
    """
    if svd_basis.v is None:
        raise ContractError(
            "window-only basis: fit from coordinates instead "
            "(conv_coordinates + model_from_coordinates)"
        )
    if svd_basis.v.shape[0] < 5:
        raise ContractError("time side too short for finite differencing")
    ratio = svd_basis.sigma[0] / svd_basis.sigma[-1]
    if ratio > 1e14:
        raise NumericFailure(
            f"singular-value ratio {ratio:.3e} too degenerate for the "
            "normalized fit"
        )
    if ratio > 1e12:
        warnings.warn(
            f"singular-value ratio {ratio:.3e} is near the working-precision "
            "limit; trailing coordinates carry few reliable digits",
            RuntimeWarning,
            stacklevel=2,
        )
    dt = svd_basis.dt
    v_cont = svd_basis.v_continuous().T  # (r, M)
    t_time = fit_generator_lstsq(v_cont, dt)
    t_window = window_side_operator(svd_basis)

    model = _model_from_operator(
        t_time,
        KIND_GENERATOR,
        dt,
        basis_ref=svd_basis.token(),
        diagnostics={
            "window_vs_time_gap": float(np.abs(t_time - t_window).max()),
            "window_side_operator": t_window,
            "native_coordinates": "normalized",
        },
    )
    amplitudes = np.linalg.solve(model.eig.vectors, v_cont[:, 0].astype(complex))
    return KoopmanModel(
        operator=model.operator,
        kind=model.kind,
        dt=model.dt,
        eig=model.eig,
        amplitudes=amplitudes,
        basis_ref=model.basis_ref,
        diagnostics=model.diagnostics,
    )


def model_from_coordinates(series: CoordinateSeries, basis_ref: str | None = None) -> KoopmanModel:
    """Least-squares generator fit on any convolutional coordinate series
    (the route used when no time-side SVD factors exist, e.g. analytic
    bases or the autocovariance fast path)."""
    t = fit_generator_lstsq(series.values, series.dt)
    model = _model_from_operator(t, KIND_GENERATOR, series.dt, basis_ref=basis_ref)
    amplitudes = np.linalg.solve(model.eig.vectors, series.values[:, 0].astype(complex))
    return KoopmanModel(
        operator=model.operator,
        kind=model.kind,
        dt=model.dt,
        eig=model.eig,
        amplitudes=amplitudes,
        basis_ref=basis_ref,
        diagnostics=model.diagnostics,
    )


def koopman_eigenfunctions(model: KoopmanModel, series: CoordinateSeries) -> EigenfunctionSeries:
    """Eigenfunction time series b(t) = P^{-1} w(t).

    ``series`` must be in the coordinates the model propagates: the
    normalized series for window-SVD models (``normalized_coordinates``),
    or the same series a least-squares fit was run on. Each row then
    evolves as b_j(0) e^{lambda_j t} when the model closes the dynamics.
    An ill-conditioned eigenvector matrix (condition number above 1e12)
    is reported as a warning.
    """
    if model.rank != series.rank:
        raise ContractError(
            f"model rank {model.rank} does not match coordinate count {series.rank}"
        )
    cond = np.linalg.cond(model.eig.vectors)
    if cond > 1e12:
        warnings.warn(
            f"eigenvector matrix is ill-conditioned (cond={cond:.3e}); "
            "eigenfunctions may be unreliable",
            RuntimeWarning,
            stacklevel=2,
        )
    values = np.linalg.solve(model.eig.vectors, series.values.astype(complex))
    return EigenfunctionSeries(values, model.eig.values, series.dt, series.t0)


def eigenfilters(model: KoopmanModel, svd_basis: SvdBasis,
                 normalized: bool = True) -> np.ndarray:
    """Window filters whose convolution with the trajectory yields the
    model's eigenfunction series.

    Rows are sum_k (P^{-1})_jk u_k(s) on the window grid (delay-major
    flat layout, continuous normalization); with ``normalized`` the
    window functions are divided by their singular values first, so the
    convolutions reproduce the eigenfunctions of a normalized-coordinate
    model (the ``havok_model`` convention). Convolve with uniform window
    weights (spacing dt), e.g. via ``embedding.project_windows``.
    """
    if model.rank != svd_basis.rank:
        raise ContractError("model rank does not match the basis rank")
    u_cont = (svd_basis.u / np.sqrt(svd_basis.dt)).T.astype(complex)
    if normalized:
        u_cont = u_cont / svd_basis.sigma_continuous[:, None]
    return np.linalg.solve(model.eig.vectors, u_cont)


def forecast(model: KoopmanModel, w0, horizon: int) -> CoordinateSeries:
    """Evolve a coordinate vector with the model's eigendecomposition.

    Produces ``horizon`` samples starting at the initial vector (t = 0).
    Complex eigenvalues are expected in conjugate pairs for real input;
    a residual imaginary part is reported and projected away.
    """
    if horizon < 1:
        raise ContractError("horizon must be at least 1")
    w0 = np.asarray(w0)
    if w0.shape != (model.rank,):
        raise ContractError(f"initial coordinates must have shape ({model.rank},)")
    require_finite(w0, "initial coordinates")
    lam = model.eig.values
    if model.kind == KIND_GENERATOR and np.any(lam.real > 1e-8):
        warnings.warn(
            "generator has eigenvalues with positive real part; the forecast "
            "grows exponentially",
            RuntimeWarning,
            stacklevel=2,
        )
    coeffs = np.linalg.solve(model.eig.vectors, w0.astype(complex))
    steps = np.arange(horizon)
    if model.kind == KIND_GENERATOR:
        dynamics = np.exp(np.outer(lam, steps * model.dt))
    else:
        dynamics = lam[:, None] ** steps[None, :]
    values = model.eig.vectors @ (coeffs[:, None] * dynamics)
    scale = max(float(np.abs(values).max()), 1e-30)
    imag_residue = float(np.abs(values.imag).max()) / scale
    if np.isrealobj(w0) and imag_residue > 1e-6:
        warnings.warn(
            f"forecast has unpaired complex eigenvalues (imaginary residue "
            f"{imag_residue:.3e}); projecting onto the real part",
            RuntimeWarning,
            stacklevel=2,
        )
    return CoordinateSeries(values.real, model.dt, 0.0)


def snapshot_forecast(model: KoopmanModel, horizon: int) -> np.ndarray:
    """Ambient snapshot reconstruction for mode-carrying models:
    x_k = modes @ (amplitudes * lambda^k), real part, for k < horizon."""
    if model.modes is None or model.amplitudes is None:
        raise ContractError("model carries no ambient modes")
    if horizon < 1:
        raise ContractError("horizon must be at least 1")
    lam = model.eig.values
    dynamics = lam[:, None] ** np.arange(horizon)[None, :]
    return (model.modes @ (model.amplitudes[:, None] * dynamics)).real


def truncation_error_rms(k_ext: np.ndarray, sigma, n_keep: int, total_time: float) -> float:
    """Root-mean-square residual bound for truncating the coordinate
    dynamics to the first ``n_keep`` coordinates:
    (1/T) sqrt(sum_{j<=N} sum_{k>N} sigma_k^2 K_jk^2) over the tail
    columns of the extended generator."""
    k_ext = np.asarray(k_ext, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    r_tot = k_ext.shape[0]
    if k_ext.shape != (r_tot, r_tot):
        raise ContractError("extended generator must be square")
    if sigma.shape[0] < r_tot:
        raise ContractError("need one sigma per extended coordinate")
    if not 1 <= n_keep <= r_tot:
        raise ContractError("n_keep out of range")
    if total_time <= 0:
        raise ContractError("total_time must be positive")
    tail = k_ext[:n_keep, n_keep:] * sigma[None, n_keep:r_tot]
    return float(np.sqrt(np.sum(tail**2)) / total_time)


def antisymmetry_defect(t_matrix, v_start, v_end) -> np.ndarray:
    """Residual of the exact identity
    v_j(T) v_k(T) - v_j(0) v_k(0) = T_jk + T_kj
    satisfied by the least-squares generator on normalized coordinates;
    zero for exact continuous factors at any horizon, and bounded by the
    finite-difference floor on sampled data."""
    t_matrix = np.asarray(t_matrix, dtype=float)
    v_start = np.asarray(v_start, dtype=float)
    v_end = np.asarray(v_end, dtype=float)
    r = t_matrix.shape[0]
    if t_matrix.shape != (r, r) or v_start.shape != (r,) or v_end.shape != (r,):
        raise ContractError("dimensions of the operator and endpoints disagree")
    boundary = np.outer(v_end, v_end) - np.outer(v_start, v_start)
    return t_matrix + t_matrix.T - boundary


def antisymmetry_defect_from_model(model: KoopmanModel, svd_basis: SvdBasis) -> np.ndarray:
    """Antisymmetry defect of a window-basis model using the first and
    last normalized coordinate samples."""
    if svd_basis.v is None:
        raise ContractError("basis carries no time-side factors")
    v_cont = svd_basis.v_continuous()
    return antisymmetry_defect(model.operator, v_cont[0], v_cont[-1])


@dataclass(frozen=True)
class InterlacingResult:
    passed: bool
    margins: np.ndarray
    alphas: np.ndarray
    betas: np.ndarray


def interlacing_check(model_r: KoopmanModel, model_r1: KoopmanModel,
                      tol: float = 1e-6) -> InterlacingResult:
    """Cauchy interlacing of the spectra of nested antisymmetrized models.

    Both models must come from the same window basis with ranks differing
    by one. The eigenvalues of i * antisym(T) are real; interlacing
    beta_i <= alpha_i <= beta_{i+1} is checked with slack ``tol`` and the
    worst margins are reported.
    """
    r = model_r.rank
    if model_r1.rank != r + 1:
        raise ContractError("second model must have rank exactly one higher")
    if (
        model_r.basis_ref is None
        or model_r1.basis_ref is None
        or model_r.basis_ref != model_r1.basis_ref
    ):
        raise ContractError("models do not come from a common window basis")

    def hermitian_form(m):
        anti = 0.5 * (m.operator - m.operator.T)
        return np.linalg.eigvalsh(1j * anti)

    alphas = hermitian_form(model_r)
    betas = hermitian_form(model_r1)
    lower = alphas - betas[:r]
    upper = betas[1:] - alphas
    margins = np.minimum(lower, upper)
    return InterlacingResult(bool(np.all(margins >= -tol)), margins, alphas, betas)


def coefficient_growth(k_matrix) -> np.ndarray:
    """Per-column largest magnitude of a generator matrix, the raw
    material for fitting how coefficients grow with the coordinate index."""
    k_matrix = np.asarray(k_matrix, dtype=float)
    if k_matrix.ndim != 2:
        raise ContractError("expected a matrix")
    return np.abs(k_matrix).max(axis=0)


def conv_coordinates_for_model(traj, svd_basis: SvdBasis) -> CoordinateSeries:
    """Convolutional coordinates of a trajectory in a window basis (the
    projection route; works with or without time-side factors)."""
    return conv_coordinates(traj, basis_from_svd(svd_basis), svd_basis.n_delays)
