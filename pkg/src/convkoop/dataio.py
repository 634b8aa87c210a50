"""CSV and metadata serialization for trajectories, bases, and models.

Every CSV starts with a versioned schema comment line so formats can
evolve without ambiguity. Numbers are written with 17 significant digits
(full double round-trip) and a fixed layout, so identical inputs produce
byte-identical files.
"""

import os

import numpy as np

from .bases import BasisSpec
from .embedding import CoordinateSeries, SvdBasis
from .exceptions import ConfigError
from .koopman import KoopmanModel
from .systems import Trajectory

SCHEMA_VERSION = 1


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _schema_line(name: str) -> str:
    return f"# convkoop-csv {name} v{SCHEMA_VERSION}\n"


def write_matrix_csv(path, matrix, name: str, header: str | None = None):
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_schema_line(name))
        if header:
            fh.write(header + "\n")
        for row in matrix:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def read_matrix_csv(path) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                rows.append([float(tok) for tok in line.split(",")])
            except ValueError:
                continue  # column-header line
    if not rows:
        raise ConfigError(f"no numeric rows in {path}")
    return np.asarray(rows)


def write_keyvalues(path, pairs: dict):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# convkoop-meta v{SCHEMA_VERSION}\n")
        for key, value in pairs.items():
            fh.write(f"{key}={value}\n")


def read_keyvalues(path) -> dict:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"bad key=value line in {path}: {line!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def write_trajectory(path, traj: Trajectory):
    """Trajectory CSV: header ``t,ch0,ch1,...``, one row per snapshot."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_schema_line("trajectory"))
        fh.write("t," + ",".join(f"ch{d}" for d in range(traj.channels)) + "\n")
        times = traj.times
        for m in range(traj.n_samples):
            fh.write(
                _fmt(times[m])
                + ","
                + ",".join(_fmt(x) for x in traj.samples[:, m])
                + "\n"
            )


def read_trajectory(path) -> Trajectory:
    data = read_matrix_csv(path)
    if data.shape[1] < 2 or data.shape[0] < 2:
        raise ConfigError(f"{path} does not look like a trajectory CSV")
    times = data[:, 0]
    steps = np.diff(times)
    dt = float(steps[0])
    if dt <= 0 or not np.allclose(steps, dt, rtol=1e-9, atol=1e-12 * max(abs(times[-1]), 1.0)):
        raise ConfigError(f"{path} is not uniformly sampled")
    return Trajectory(data[:, 1:].T.copy(), dt, float(times[0]))


def write_svd_basis(out_dir, basis: SvdBasis, prefix: str = "basis"):
    """Window basis as three CSVs (u, sigma, v) plus a metadata file."""
    os.makedirs(out_dir, exist_ok=True)
    write_matrix_csv(os.path.join(out_dir, f"{prefix}_u.csv"), basis.u, "basis-u")
    write_matrix_csv(
        os.path.join(out_dir, f"{prefix}_sigma.csv"), basis.sigma[None, :], "basis-sigma"
    )
    if basis.v is not None:
        write_matrix_csv(os.path.join(out_dir, f"{prefix}_v.csv"), basis.v, "basis-v")
    write_keyvalues(
        os.path.join(out_dir, f"{prefix}.meta"),
        {
            "dt": _fmt(basis.dt),
            "tau": _fmt(basis.tau),
            "n_delays": basis.n_delays,
            "n_channels": basis.n_channels,
            "rank": basis.rank,
            "t0": _fmt(basis.t0),
            "sign_canonical": basis.sign_canonical,
            "has_time_side": basis.v is not None,
        },
    )


def read_svd_basis(out_dir, prefix: str = "basis") -> SvdBasis:
    meta = read_keyvalues(os.path.join(out_dir, f"{prefix}.meta"))
    u = read_matrix_csv(os.path.join(out_dir, f"{prefix}_u.csv"))
    sigma = read_matrix_csv(os.path.join(out_dir, f"{prefix}_sigma.csv")).ravel()
    v = None
    if meta.get("has_time_side") == "True":
        v = read_matrix_csv(os.path.join(out_dir, f"{prefix}_v.csv"))
    return SvdBasis(
        u,
        sigma,
        v,
        int(meta["n_delays"]),
        int(meta["n_channels"]),
        float(meta["dt"]),
        float(meta.get("t0", 0.0)),
        meta.get("sign_canonical", "True") == "True",
    )


def write_basis_spec(out_dir, basis: BasisSpec, prefix: str = "filters"):
    """Sampled filter basis: values and derivatives plus metadata."""
    os.makedirs(out_dir, exist_ok=True)
    write_matrix_csv(os.path.join(out_dir, f"{prefix}_values.csv"), basis.values, "filter-values")
    write_matrix_csv(os.path.join(out_dir, f"{prefix}_derivs.csv"), basis.derivs, "filter-derivs")
    write_keyvalues(
        os.path.join(out_dir, f"{prefix}.meta"),
        {
            "kind": basis.kind,
            "size": basis.size,
            "tau": _fmt(basis.tau),
            "n_points": basis.n_points,
            "channels": basis.channels,
        },
    )


def write_model(out_dir, model: KoopmanModel, prefix: str = "model"):
    """Model as operator/eigenvalue/amplitude CSVs plus a flat spectrum
    CSV (omega_re, omega_im, amplitude magnitude) ready for plotting."""
    os.makedirs(out_dir, exist_ok=True)
    write_matrix_csv(os.path.join(out_dir, f"{prefix}_operator.csv"), model.operator, "operator")
    lam = model.eig.values
    write_matrix_csv(
        os.path.join(out_dir, f"{prefix}_eigenvalues.csv"),
        np.column_stack([lam.real, lam.imag]),
        "eigenvalues",
        header="re,im",
    )
    if model.amplitudes is not None:
        write_matrix_csv(
            os.path.join(out_dir, f"{prefix}_amplitudes.csv"),
            np.column_stack([model.amplitudes.real, model.amplitudes.imag]),
            "amplitudes",
            header="re,im",
        )
    omega = model.continuous_eigenvalues()
    amp = (
        np.abs(model.amplitudes)
        if model.amplitudes is not None
        else np.zeros(model.rank)
    )
    write_matrix_csv(
        os.path.join(out_dir, f"{prefix}_spectrum.csv"),
        np.column_stack([omega.real, omega.imag, amp]),
        "spectrum",
        header="omega_re,omega_im,amplitude",
    )
    meta = {
        "kind": model.kind,
        "dt": _fmt(model.dt),
        "rank": model.rank,
        "basis_ref": model.basis_ref or "",
    }
    for key, value in model.diagnostics.items():
        if isinstance(value, (int, float, str, bool)):
            meta[f"diag_{key}"] = _fmt(value) if isinstance(value, float) else value
    write_keyvalues(os.path.join(out_dir, f"{prefix}.meta"), meta)


def write_coordinates(path, series: CoordinateSeries):
    """Coordinate series CSV: header ``t,w0,w1,...``, one row per sample."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_schema_line("coordinates"))
        fh.write("t," + ",".join(f"w{j}" for j in range(series.rank)) + "\n")
        times = series.times
        for m in range(series.n_samples):
            fh.write(
                _fmt(times[m])
                + ","
                + ",".join(_fmt(x) for x in series.values[:, m])
                + "\n"
            )


def read_coordinates(path) -> CoordinateSeries:
    data = read_matrix_csv(path)
    times = data[:, 0]
    dt = float(times[1] - times[0])
    return CoordinateSeries(data[:, 1:].T.copy(), dt, float(times[0]))


def write_autocovariance(path, acov):
    write_matrix_csv(path, acov.matrix, "autocovariance")
