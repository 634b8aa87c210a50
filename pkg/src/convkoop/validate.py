"""The acceptance suite: eleven checkable criteria covering the analytic
generator tables, basis-independent coordinate dynamics, estimator
equivalence, spectrum recovery and its documented failure mode, the
benchmark-system experiments, structural diagnostics, the fast
autocovariance path, and end-to-end determinism.

Each criterion is a function of a shared workspace (which memoizes the
expensive simulations and decompositions) returning a pass/fail result
with a deterministic detail string; wall-clock measurements never enter
the report payload, so identical runs produce byte-identical reports.
"""

import os
import time
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import subspace_angles

from . import autocov, bases, embedding, koopman, systems
from .dataio import _fmt
from .numerics import finite_diff


@dataclass(frozen=True)
class CriterionResult:
    index: int
    name: str
    passed: bool
    detail: str


class Workspace:
    """Memoized intermediate results shared between criteria."""

    def __init__(self, seed: int = 1234):
        self.seed = seed
        self._cache = {}

    def get(self, key, builder):
        if key not in self._cache:
            self._cache[key] = builder()
        return self._cache[key]

    # -- linear benchmark ------------------------------------------------

    def linear_spec(self, min_gap=2.0):
        # frequency floor 1.0 keeps every +/- pair separated by at least
        # min_gap on the tau = 0.5 window (2 * omega_min * tau >= 1)
        return self.get(
            ("linear_spec", min_gap),
            lambda: systems.make_linear_random(
                self.seed, 5, 10.0, min_gap, omega_min=1.0
            ),
        )

    def linear_traj(self, dt=1e-3, min_gap=2.0, total_time=100.0):
        def build():
            spec = self.linear_spec(min_gap)
            full = systems.integrate_rk4(
                spec, systems.default_initial_state(spec), dt,
                int(round(total_time / dt)),
            )
            return systems.Trajectory(
                full.samples[0::2].sum(axis=0, keepdims=True), dt
            )

        return self.get(("linear_traj", dt, min_gap, total_time), build)

    def linear_model(self, dt=1e-3, rank=10, tau=0.5):
        def build():
            traj = self.linear_traj(dt)
            n = int(round(2 * tau / dt)) + 1
            basis = embedding.svd_basis_from_trajectory(traj, n, rank)
            return basis, koopman.havok_model(basis)

        return self.get(("linear_model", dt, rank, tau), build)

    # -- two-frequency pair systems (crowding study) ---------------------

    def pair_model(self, freqs, tau=1.0, dt=1e-3, total_time=100.0, rank=4):
        def build():
            spec = systems.LinearRandomImag(tuple(freqs))
            full = systems.integrate_rk4(
                spec, systems.default_initial_state(spec), dt,
                int(round(total_time / dt)),
            )
            traj = systems.Trajectory(
                full.samples[0::2].sum(axis=0, keepdims=True), dt
            )
            n = int(round(2 * tau / dt)) + 1
            basis = embedding.svd_basis_from_trajectory(traj, n, rank)
            return basis, koopman.havok_model(basis)

        return self.get(("pair_model", tuple(freqs), tau, dt, total_time, rank), build)

    # -- Van der Pol ------------------------------------------------------

    def vdp_traj(self, mu, dt=1e-3, total_time=100.0, transient=30.0):
        def build():
            steps = int(round((total_time + transient) / dt))
            traj = systems.integrate_rk4(
                systems.VanDerPol(mu), np.array([2.0, 0.0]), dt, steps
            )
            skip = int(round(transient / dt))
            return systems.Trajectory(traj.samples[:1, skip:], dt)

        return self.get(("vdp_traj", mu, dt, total_time, transient), build)

    def vdp_model(self, mu, window, rank, dt=1e-3):
        def build():
            traj = self.vdp_traj(mu, dt)
            n = int(round(window / dt)) + 1
            basis = embedding.svd_basis_from_trajectory(traj, n, rank)
            return traj, basis, koopman.havok_model(basis)

        return self.get(("vdp_model", mu, window, rank, dt), build)

    # -- Lorenz ------------------------------------------------------------

    def lorenz_traj(self):
        def build():
            traj = systems.integrate_rk4(
                systems.Lorenz(), np.array([1.0, 1.0, 1.0]), 1e-3, 100000
            )
            return systems.Trajectory(traj.samples[:1, :], 1e-3)

        return self.get("lorenz_traj", build)

    def lorenz_basis(self, rank=16):
        return self.get(
            ("lorenz_basis", rank),
            lambda: embedding.svd_basis_from_trajectory(
                self.lorenz_traj(), 100, rank
            ),
        )

    def lorenz_models(self, ranks):
        basis = self.lorenz_basis(max(ranks) if max(ranks) > 16 else 16)
        out = {}
        for r in ranks:
            out[r] = self.get(
                ("lorenz_model", r),
                lambda r=r: koopman.havok_model(basis.truncate(r)),
            )
        return out

    # -- wave equation ------------------------------------------------------

    def nls_traj(self):
        return self.get("nls_traj", lambda: systems.simulate_nls(systems.Nls()))


def _fft_fundamental(signal, dt):
    """Angular frequency of the dominant spectral peak, refined by
    parabolic interpolation on the log amplitude."""
    amp = np.abs(np.fft.rfft(signal - signal.mean()))
    freq = 2.0 * np.pi * np.fft.rfftfreq(signal.shape[0], d=dt)
    k = int(np.argmax(amp[1:])) + 1
    if 1 <= k < amp.shape[0] - 1:
        la, lb, lc = np.log(amp[k - 1 : k + 2])
        shift = 0.5 * (la - lc) / (la - 2 * lb + lc)
    else:
        shift = 0.0
    return freq[k] + shift * (freq[1] - freq[0])


# -- criteria ---------------------------------------------------------------


def c01_generator_tables(ws: Workspace) -> CriterionResult:
    """Closed-form generator matrices match Gauss quadrature entrywise
    within 1e-8 for sizes up to 20 and tau in {0.5, 1, 3}; the Legendre
    table is strictly upper triangular with the odd-parity checkerboard."""
    worst = 0.0
    for tau in (0.5, 1.0, 3.0):
        k_f = bases.fourier_generator(21, tau)
        q_f = bases.generator_by_quadrature(bases.KIND_FOURIER, 21, tau)
        worst = max(worst, float(np.abs(k_f - q_f).max()))
        k_l = bases.legendre_generator(20, tau)
        q_l = bases.generator_by_quadrature(bases.KIND_LEGENDRE, 20, tau)
        worst = max(worst, float(np.abs(k_l - q_l).max()))
        if np.abs(np.tril(k_l)).max() != 0.0:
            return CriterionResult(1, "generator-tables", False,
                                   "lower triangle not zero")
        j, k = np.meshgrid(np.arange(20), np.arange(20), indexing="ij")
        if np.abs(k_l[(j + k) % 2 == 0]).max() != 0.0:
            return CriterionResult(1, "generator-tables", False,
                                   "parity checkerboard violated")
    return CriterionResult(
        1, "generator-tables", worst <= 1e-8, f"max_quadrature_gap={_fmt(worst)}"
    )


def c02_universality(ws: Workspace) -> CriterionResult:
    """One generator matrix, computed from the Legendre filter bank alone,
    closes the coordinate dynamics of two unrelated systems: the residual
    of dw/dt = K_ext w stays below 10x the truncation bound.

    Windows are sized so the tail coordinates are genuinely live
    (bandwidth times tau well past the kept index): 1.0 time units for
    the multitone linear benchmark, 2.0 for the Van der Pol attractor.
    """
    n_keep, n_tail = 10, 15
    details = []
    passed = True
    for label, traj, window in (
        ("linear", ws.linear_traj(), 1.0),
        ("vdp", ws.vdp_traj(1.0), 2.0),
    ):
        dt = traj.dt
        n = int(round(window / dt)) + 1
        tau = (n - 1) * dt / 2
        spec = bases.legendre_basis(n_keep + n_tail, tau, bases.window_grid(n, dt))
        k_ext = koopman.generator_from_basis(spec).operator
        series = embedding.conv_coordinates(traj, spec, n)
        w = series.values
        horizon = series.dt * (series.n_samples - 1)
        wdot = finite_diff(w, series.dt, axis=1)
        residual = wdot[:n_keep] - (k_ext @ w)[:n_keep]
        sigma = np.sqrt((w**2).sum(axis=1) * series.dt)
        bound = koopman.truncation_error_rms(k_ext, sigma, n_keep, horizon)
        worst = float(np.abs(residual).max())
        ok = worst < 10.0 * bound
        passed = passed and ok
        details.append(f"{label}: residual={_fmt(worst)} bound={_fmt(bound)}")
    return CriterionResult(2, "universality", passed, "; ".join(details))


def c03_estimator_equivalence(ws: Workspace) -> CriterionResult:
    """Time-side least squares and the rescaled window-side inner products
    agree within 1e-3 on the separated linear benchmark, and halving dt
    shrinks the gap by at least 3x."""
    _, model_fine = ws.linear_model(dt=1e-3)
    _, model_coarse = ws.linear_model(dt=2e-3)
    gap_fine = model_fine.diagnostics["window_vs_time_gap"]
    gap_coarse = model_coarse.diagnostics["window_vs_time_gap"]
    ratio = gap_coarse / gap_fine
    passed = gap_fine <= 1e-3 and ratio >= 3.0
    return CriterionResult(
        3, "estimator-equivalence", passed,
        f"gap={_fmt(gap_fine)} refinement_ratio={_fmt(ratio)}",
    )


def c04_spectrum_recovery(ws: Workspace) -> CriterionResult:
    """Recovered eigenvalues match the seeded frequencies within 1e-4 and
    the 10-unit forecast of the first convolutional coordinate has
    relative RMS at most 1e-3."""
    basis, model = ws.linear_model()
    seeded = np.sort(np.array(ws.linear_spec().frequencies))
    truth = np.sort(np.concatenate([seeded, -seeded]))
    recovered = np.sort(model.eig.values.imag)
    eig_err = float(np.abs(recovered - truth).max())

    series = embedding.normalized_coordinates(basis)
    horizon = int(round(10.0 / basis.dt)) + 1
    fc = koopman.forecast(model, series.values[:, 0], horizon)
    sigma0 = basis.sigma_continuous[0]
    pred = sigma0 * fc.values[0]
    actual = sigma0 * series.values[0, :horizon]
    rms = float(np.linalg.norm(pred - actual) / np.linalg.norm(actual))
    passed = eig_err <= 1e-4 and rms <= 1e-3
    return CriterionResult(
        4, "spectrum-recovery", passed,
        f"eig_err={_fmt(eig_err)} forecast_rms={_fmt(rms)}",
    )


def c05_spectral_crowding(ws: Workspace) -> CriterionResult:
    """Documented failure mode, not a fix: two frequencies with
    gap * tau = 0.01 make the window exponentials nearly collinear
    (normalized inner product at least 0.999), and a model estimated from
    the window basis vectors (the route the robustness recommendation
    warns about) forecasts at least 10x worse than in the separated
    configuration. The time-side route stays at its floor either way."""
    tau = 1.0
    crowded_freqs = (5.0, 5.01)
    separated_freqs = (3.0, 7.0)

    dt = 1e-3
    s = bases.window_grid(int(round(2 * tau / dt)) + 1, dt)
    e1 = np.exp(1j * crowded_freqs[0] * s)
    e2 = np.exp(1j * crowded_freqs[1] * s)
    inner = abs(np.sum(np.conj(e1) * e2)) / (
        np.linalg.norm(e1) * np.linalg.norm(e2)
    )
    sinc_ok = inner >= 0.999

    def window_route_rms(freqs):
        basis, model = ws.pair_model(freqs, tau=tau)
        t_window = model.diagnostics["window_side_operator"]
        wmodel = koopman.KoopmanModel(
            operator=t_window, kind=koopman.KIND_GENERATOR, dt=basis.dt,
            eig=koopman.eig(t_window),
        )
        series = embedding.normalized_coordinates(basis)
        horizon = int(round(10.0 / basis.dt)) + 1
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            fc = koopman.forecast(wmodel, series.values[:, 0], horizon)
        truth = series.values[:, :horizon]
        return float(np.linalg.norm(fc.values - truth) / np.linalg.norm(truth))

    rms_crowded = window_route_rms(crowded_freqs)
    rms_separated = window_route_rms(separated_freqs)
    degradation = rms_crowded / max(rms_separated, 1e-300)
    passed = sinc_ok and degradation >= 10.0
    return CriterionResult(
        5, "spectral-crowding", passed,
        f"eigvec_inner={_fmt(float(inner))} degradation={_fmt(degradation)}x",
    )


def c06_vdp_frequency(ws: Workspace) -> CriterionResult:
    """Weakly nonlinear frequency shift and harmonic structure: at
    mu = 0.1 the dominant recovered frequency matches 1 + 7 mu^2/16
    within 2e-3; at mu in {0.5, 1, 3} (windows 1.0, 1.5, 3.0) every
    recovered frequency sits within 2% of an integer multiple of the
    FFT fundamental."""
    details = []

    _, _, model = ws.vdp_model(0.1, window=1.0, rank=6)
    amps = np.abs(model.amplitudes)
    dominant = model.eig.values[int(np.argmax(amps))]
    shift_target = 1.0 + 7.0 * 0.1**2 / 16.0
    shift_err = abs(abs(dominant.imag) - shift_target)
    passed = shift_err <= 2e-3
    details.append(f"mu=0.1: |omega1|_err={_fmt(float(shift_err))}")

    for mu, window, rank in ((0.5, 1.0, 8), (1.0, 1.5, 8), (3.0, 3.0, 10)):
        traj, _, model = ws.vdp_model(mu, window=window, rank=rank)
        fundamental = _fft_fundamental(traj.samples[0], traj.dt)
        lam = model.eig.values
        worst_rel = 0.0
        for w in np.abs(lam.imag):
            if w < 0.3 * fundamental:
                continue  # the near-zero mode of odd-sized models
            k = max(1, int(round(w / fundamental)))
            worst_rel = max(worst_rel, abs(w - k * fundamental) / (k * fundamental))
        ok = worst_rel <= 0.02
        passed = passed and ok
        details.append(f"mu={mu}: max_rel_offset={_fmt(worst_rel)}")
    return CriterionResult(6, "vdp-frequency", passed, "; ".join(details))


def c07_antisymmetry_interlacing(ws: Workspace) -> CriterionResult:
    """Antisymmetry residual below 1e-3 on the linear and Lorenz presets;
    eigenvalues of nested antisymmetrized models interlace for ranks 5
    through 14 on the Lorenz preset with slack 1e-3."""
    basis_lin, model_lin = ws.linear_model()
    defect_lin = float(np.abs(
        koopman.antisymmetry_defect_from_model(model_lin, basis_lin)
    ).max())

    lorenz = ws.lorenz_models(list(range(5, 16)))
    basis_lor = ws.lorenz_basis()
    model_lor15 = lorenz[15]
    defect_lor = float(np.abs(
        koopman.antisymmetry_defect_from_model(model_lor15, basis_lor.truncate(15))
    ).max())

    interlace_ok = True
    worst_margin = np.inf
    for r in range(5, 15):
        result = koopman.interlacing_check(lorenz[r], lorenz[r + 1], tol=1e-3)
        interlace_ok = interlace_ok and result.passed
        worst_margin = min(worst_margin, float(result.margins.min()))

    passed = defect_lin <= 1e-3 and defect_lor <= 1e-3 and interlace_ok
    return CriterionResult(
        7, "antisymmetry-interlacing", passed,
        f"defect_linear={_fmt(defect_lin)} defect_lorenz={_fmt(defect_lor)} "
        f"interlacing_margin={_fmt(worst_margin)}",
    )


def c08_lorenz_structure(ws: Workspace) -> CriterionResult:
    """Near-tridiagonal structure of the normalized Lorenz operator:
    under 20% of the squared Frobenius mass sits outside the tridiagonal
    band, and the first super/sub-diagonals have opposite signs."""
    model = ws.lorenz_models([15])[15]
    t = model.operator
    r = t.shape[0]
    band = np.zeros_like(t, dtype=bool)
    for off in (-1, 0, 1):
        band |= np.eye(r, k=off, dtype=bool)
    mass_out = float(np.sum(t[~band] ** 2) / np.sum(t**2))

    upper = np.diag(t, 1)
    lower = np.diag(t, -1)
    signs_ok = bool(np.all(np.sign(upper) == -np.sign(lower)))
    passed = mass_out < 0.20 and signs_ok
    return CriterionResult(
        8, "lorenz-structure", passed,
        f"off_band_mass={_fmt(mass_out)} sign_antisymmetric={signs_ok}",
    )


def c09_nls_comparison(ws: Workspace) -> CriterionResult:
    """Held-out comparison on the breather preset (70/30 split, rank 14):
    the window-basis model beats DMD on linear observables and stays
    within 1.5x of the cubic-observable EDMD."""
    traj = ws.nls_traj()
    n_train = int(0.7 * traj.n_samples)
    train = systems.Trajectory(traj.samples[:, :n_train], traj.dt)
    rank = 14

    def test_rms(pred_cols, cols):
        truth = traj.samples[:, cols]
        return float(np.linalg.norm(pred_cols - truth) / np.linalg.norm(truth))

    test_cols = np.arange(n_train, traj.n_samples)

    # linear-observable DMD fit on the training split
    dmd_model = koopman.dmd(
        train.samples[:, :-1], train.samples[:, 1:], rank, dt=traj.dt
    )
    dmd_pred = koopman.snapshot_forecast(dmd_model, traj.n_samples)
    rms_dmd = test_rms(dmd_pred[:, test_cols], test_cols)

    # EDMD with the cubic observable
    edmd_model = koopman.edmd(train, "nls-cubic", rank)
    edmd_pred = koopman.snapshot_forecast(edmd_model, traj.n_samples)
    rms_edmd = test_rms(edmd_pred[: traj.channels, test_cols], test_cols)

    # window-basis model on the training split
    n_delays = 21
    center = (n_delays - 1) // 2
    basis = embedding.svd_basis_from_trajectory(train, n_delays, rank, method="direct")
    model = koopman.havok_model(basis)
    v = embedding.normalized_coordinates(basis)
    last = v.n_samples - 1
    horizon = traj.n_samples  # generous; clipped below
    fc = koopman.forecast(model, v.values[:, last], horizon)
    w_fc = basis.sigma_continuous[:, None] * fc.values
    spec = embedding.basis_from_svd(basis)
    d = traj.channels
    center_block = spec.values[:, center * d : (center + 1) * d]
    pred = center_block.T @ w_fc  # (channels, horizon)
    first_sample = last + center  # trajectory sample index at forecast k=0
    cols = np.arange(first_sample, traj.n_samples)
    keep = cols >= n_train
    rms_havok = test_rms(pred[:, np.nonzero(keep)[0]], cols[keep])

    passed = rms_havok < rms_dmd and rms_havok <= 1.5 * rms_edmd
    return CriterionResult(
        9, "nls-comparison", passed,
        f"havok={_fmt(rms_havok)} dmd={_fmt(rms_dmd)} edmd={_fmt(rms_edmd)}",
    )


def c10_fast_autocovariance(ws: Workspace) -> CriterionResult:
    """The Taylor-expanded autocovariance reproduces the leading window
    subspace (principal angle below 0.05 rad on the Lorenz preset) and
    its construction beats the exact product by at least 3x."""
    traj = ws.lorenz_traj()
    n = 100

    taylor = autocov.basis_from_autocov(autocov.autocov_taylor(traj, n, 6), 5)
    exact_basis = ws.lorenz_basis()
    angle = float(subspace_angles(taylor.u, exact_basis.u[:, :5]).max())

    def time_exact():
        t0 = time.perf_counter()
        h = embedding.build_hankel(traj, n)
        autocov.autocov_exact(h)
        return time.perf_counter() - t0

    def time_taylor():
        t0 = time.perf_counter()
        autocov.autocov_taylor(traj, n, 6)
        return time.perf_counter() - t0

    exact_s = min(time_exact() for _ in range(3))
    taylor_s = min(time_taylor() for _ in range(3))
    speedup = exact_s / taylor_s
    passed = angle < 0.05 and speedup >= 3.0
    return CriterionResult(
        10, "fast-autocovariance", passed,
        f"principal_angle={_fmt(angle)} speedup_ok={speedup >= 3.0}",
    )


def c11_determinism(ws: Workspace) -> CriterionResult:
    """A representative simulate-embed-model-forecast chain run twice from
    the same seed produces byte-identical numeric payloads."""

    def payload():
        local = Workspace(ws.seed)
        basis, model = local.linear_model()
        series = embedding.normalized_coordinates(basis)
        fc = koopman.forecast(model, series.values[:, 0], 501)
        parts = [
            ",".join(_fmt(x) for x in basis.sigma),
            ",".join(_fmt(x) for x in model.operator.ravel()),
            ",".join(_fmt(x) for x in model.eig.values.view(float)),
            ",".join(_fmt(x) for x in fc.values.ravel()[:1000]),
        ]
        return "\n".join(parts)

    first = payload()
    second = payload()
    passed = first == second
    return CriterionResult(
        11, "determinism", passed,
        f"payload_bytes={len(first)} identical={passed}",
    )


CRITERIA = [
    c01_generator_tables,
    c02_universality,
    c03_estimator_equivalence,
    c04_spectrum_recovery,
    c05_spectral_crowding,
    c06_vdp_frequency,
    c07_antisymmetry_interlacing,
    c08_lorenz_structure,
    c09_nls_comparison,
    c10_fast_autocovariance,
    c11_determinism,
]

NAMES = [fn.__name__.split("_", 1)[1].replace("_", "-") for fn in CRITERIA]


def run(names=None, seed: int = 1234, out_dir: str = ".", workspace=None):
    """Run the requested criteria (all by default), print one line per
    criterion, and write a machine-readable report CSV."""
    ws = workspace or Workspace(seed)
    selected = []
    if names:
        for token in names:
            token = str(token).strip()
            if token.isdigit():
                idx = int(token) - 1
                if not 0 <= idx < len(CRITERIA):
                    raise ValueError(f"criterion index {token} out of range")
                selected.append(idx)
            elif token in NAMES:
                selected.append(NAMES.index(token))
            else:
                raise ValueError(
                    f"unknown criterion '{token}'; choices: {', '.join(NAMES)}"
                )
    else:
        selected = list(range(len(CRITERIA)))

    results = []
    for idx in selected:
        fn = CRITERIA[idx]
        try:
            result = fn(ws)
        except Exception as exc:  # an erroring criterion is a failed criterion
            result = CriterionResult(
                idx + 1, NAMES[idx], False, f"error: {type(exc).__name__}: {exc}"
            )
        results.append(result)
        status = "PASS" if result.passed else "FAIL"
        print(f"[{result.index:2d}/11] {result.name:<26s} {status}  {result.detail}")

    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, "validation_report.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("# convkoop-csv validation-report v1\n")
            fh.write("index,name,status,detail\n")
            for r in results:
                detail = r.detail.replace(",", ";")
                fh.write(f"{r.index},{r.name},{'PASS' if r.passed else 'FAIL'},{detail}\n")
        print(f"report: {path}")
    return results
