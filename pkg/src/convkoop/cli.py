"""Command-line driver: simulate benchmark systems, embed trajectories,
fit operator models, forecast, and run the validation suite.

Subcommands: simulate, embed, model, forecast, validate. Options can come
from flags or from a flat key=value config file (``--config``); explicit
flags win. Exit codes: 0 success, 1 configuration problem, 2 numeric
failure, 3 contract violation (a validation run that fails criteria also
exits 1).
"""

import argparse
import math
import os
import sys

import numpy as np

from . import autocov as autocov_mod
from . import bases, dataio, embedding, koopman, plots, systems, validate
from .exceptions import ConfigError, ContractError, NumericFailure


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _read_config_file(path):
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    return dataio.read_keyvalues(path)


def _merge_config(args, defaults):
    """Flags > config file > defaults; returns a plain dict."""
    cfg = dict(defaults)
    if getattr(args, "config", None):
        file_cfg = _read_config_file(args.config)
        for key, value in file_cfg.items():
            key = key.replace("-", "_")
            if key not in defaults:
                raise ConfigError(f"unknown config key '{key}'")
            cfg[key] = value
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return cfg


def _as_float(cfg, key):
    try:
        return float(cfg[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad numeric value for {key}: {cfg[key]!r}") from exc


def _as_int(cfg, key):
    try:
        return int(cfg[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad integer value for {key}: {cfg[key]!r}") from exc


def _as_bool(value):
    if isinstance(value, bool):
        return value
    return str(value).lower() in ("1", "true", "yes", "on")


_SIM_DEFAULTS = {
    "preset": "linear",
    "dt": 0.001,
    "t_final": 100.0,
    "transient": 0.0,
    "seed": 0,
    "mu": 1.0,
    "n_pairs": 5,
    "omega_max": 10.0,
    "min_gap": 0.5,
    "n_grid": 256,
    "n_snapshots": 2000,
    "x_half_width": 15.0,
    "x0": "",
    "out": ".",
}


def _simulate_from_config(cfg) -> systems.Trajectory:
    preset = cfg["preset"]
    dt = _as_float(cfg, "dt")
    t_final = _as_float(cfg, "t_final")
    transient = _as_float(cfg, "transient")
    seed = _as_int(cfg, "seed")

    if preset == "nls":
        spec = systems.Nls(
            n_grid=_as_int(cfg, "n_grid"),
            x_half_width=_as_float(cfg, "x_half_width"),
            t_final=t_final if cfg["t_final"] != _SIM_DEFAULTS["t_final"] else 16.0 * math.pi,
            n_snapshots=_as_int(cfg, "n_snapshots"),
        )
        return systems.simulate_nls(spec)

    if preset == "linear":
        spec = systems.make_linear_random(
            seed, _as_int(cfg, "n_pairs"), _as_float(cfg, "omega_max"),
            _as_float(cfg, "min_gap"),
        )
    elif preset == "vdp":
        spec = systems.VanDerPol(_as_float(cfg, "mu"))
    elif preset == "lorenz":
        spec = systems.Lorenz()
    else:
        raise ConfigError(f"unknown preset '{preset}'")

    if cfg["x0"]:
        x0 = np.array([float(tok) for tok in str(cfg["x0"]).split(",")])
    else:
        x0 = systems.default_initial_state(spec)
    steps = int(round((t_final + transient) / dt))
    traj = systems.integrate_rk4(spec, x0, dt, steps)
    if transient > 0:
        skip = int(round(transient / dt))
        traj = systems.Trajectory(traj.samples[:, skip:], dt)
    return traj


def _load_trajectory(cfg) -> systems.Trajectory:
    if cfg.get("input"):
        path = cfg["input"]
        if not os.path.exists(path):
            raise ConfigError(f"input trajectory not found: {path}")
        return dataio.read_trajectory(path)
    return _simulate_from_config(cfg)


def _select_channels(traj: systems.Trajectory, channel, preset) -> systems.Trajectory:
    """Measurement selection: an integer channel, "all", or "sum" (the
    scalar observable summing the leading component of every rotation
    pair; the default for the linear preset, whose block-diagonal
    channels are individually single-frequency)."""
    if channel in (None, ""):
        channel = "sum" if preset == "linear" else "0"
    channel = str(channel)
    if channel == "all":
        return traj
    if channel == "sum":
        return systems.Trajectory(
            traj.samples[0::2].sum(axis=0, keepdims=True), traj.dt, traj.t0
        )
    idx = int(channel)
    if not 0 <= idx < traj.channels:
        raise ConfigError(f"channel {idx} out of range (0..{traj.channels - 1})")
    return traj.select_channels([idx])


def cmd_simulate(args):
    cfg = _merge_config(args, _SIM_DEFAULTS)
    traj = _simulate_from_config(cfg)
    out_dir = cfg["out"]
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{cfg['preset']}_trajectory.csv")
    dataio.write_trajectory(path, traj)
    print(f"wrote {path} ({traj.channels} channels, {traj.n_samples} samples)")
    return 0


_EMBED_DEFAULTS = dict(
    _SIM_DEFAULTS,
    input="",
    channel="",
    ndelays=100,
    rank=15,
    fast=False,
    nmax=6,
    no_plots=False,
)


def _build_basis(traj, cfg) -> embedding.SvdBasis:
    n_delays = _as_int(cfg, "ndelays")
    rank = _as_int(cfg, "rank")
    if _as_bool(cfg["fast"]):
        acov = autocov_mod.autocov_taylor(traj, n_delays, _as_int(cfg, "nmax"))
        return autocov_mod.basis_from_autocov(acov, rank)
    return embedding.svd_basis_from_trajectory(traj, n_delays, rank)


def cmd_embed(args):
    cfg = _merge_config(args, _EMBED_DEFAULTS)
    traj = _select_channels(_load_trajectory(cfg), cfg["channel"], cfg["preset"])
    basis = _build_basis(traj, cfg)
    out_dir = cfg["out"]
    os.makedirs(out_dir, exist_ok=True)
    dataio.write_svd_basis(out_dir, basis)
    print(f"wrote window basis (rank {basis.rank}, {basis.n_delays} delays, "
          f"fast={'yes' if _as_bool(cfg['fast']) else 'no'}) to {out_dir}")
    if not _as_bool(cfg["no_plots"]):
        plots.save_singular_values(
            basis.sigma, os.path.join(out_dir, "singular_values.png")
        )
        plots.save_window_functions(
            basis.grid, basis.u[0 :: basis.n_channels, :],
            os.path.join(out_dir, "window_functions.png"),
        )
    return 0


_MODEL_DEFAULTS = dict(
    _EMBED_DEFAULTS,
    basis="svd",
    method="havok",
    dict="identity",
    tail=5,
)


def _analytic_basis(kind, n_delays, dt, rank):
    tau = (n_delays - 1) * dt / 2.0
    grid = bases.window_grid(n_delays, dt)
    if kind == "fourier":
        if rank % 2 == 0:
            raise ConfigError("fourier basis rank must be odd")
        return bases.fourier_basis(rank, tau, grid)
    return bases.legendre_basis(rank, tau, grid)


def run_model_pipeline(cfg):
    """Embed, fit, and report. Returns (trajectory, artifacts dict)."""
    traj = _select_channels(_load_trajectory(cfg), cfg["channel"], cfg["preset"])
    n_delays = _as_int(cfg, "ndelays")
    rank = _as_int(cfg, "rank")
    tail = _as_int(cfg, "tail")
    method = cfg["method"]
    basis_kind = cfg["basis"]
    artifacts = {"provenance": {
        "method": method,
        "basis": basis_kind,
        "fast_path": _as_bool(cfg["fast"]),
        "taylor_order": _as_int(cfg, "nmax") if _as_bool(cfg["fast"]) else "",
    }}

    if method == "edmd":
        model = koopman.edmd(traj, str(cfg["dict"]), rank)
        artifacts["model"] = model
        return traj, artifacts

    if basis_kind == "svd":
        ext_cfg = dict(cfg)
        ext_cfg["rank"] = rank + max(tail, 0)
        try:
            window = _build_basis(traj, ext_cfg)
        except (ContractError, NumericFailure):
            window = _build_basis(traj, cfg)  # tail exceeded the spectrum
        window_r = window.truncate(min(rank, window.rank))
        artifacts["window_basis"] = window_r
        artifacts["sigma_extended"] = window.sigma_continuous
        if window.rank > window_r.rank:
            k_ext = koopman.window_side_operator(window)
            sim = window.sigma[:, None] / window.sigma[None, :]
            artifacts["k_extended"] = k_ext * sim  # scaled-coordinate form
        series = koopman.conv_coordinates_for_model(traj, window_r)
        artifacts["coordinates"] = series
        if method == "havok":
            if window_r.v is not None:
                model = koopman.havok_model(window_r)
                artifacts["native_series"] = embedding.normalized_coordinates(window_r)
            else:
                model = koopman.model_from_coordinates(series, window_r.token())
                artifacts["native_series"] = series
        elif method == "dmd":
            w = series.values
            model = koopman.dmd(w[:, :-1], w[:, 1:], min(rank, w.shape[0]), dt=traj.dt)
            artifacts["native_series"] = series
        else:
            raise ConfigError(f"unknown method '{method}'")
        artifacts["model"] = model
        return traj, artifacts

    if basis_kind in ("fourier", "legendre"):
        spec = _analytic_basis(basis_kind, n_delays, traj.dt, rank)
        if traj.channels != 1:
            raise ConfigError("analytic bases expect a single measured channel")
        series = embedding.conv_coordinates(traj, spec, n_delays)
        artifacts["coordinates"] = series
        artifacts["native_series"] = series
        artifacts["analytic_model"] = koopman.generator_from_basis(spec)
        model = koopman.model_from_coordinates(series, spec.token)
        artifacts["model"] = model
        ext = _analytic_basis(basis_kind, n_delays, traj.dt,
                              rank + tail if basis_kind != "fourier" else rank + 2 * tail)
        artifacts["k_extended"] = koopman.generator_from_basis(ext).operator
        w_ext = embedding.conv_coordinates(traj, ext, n_delays)
        horizon = w_ext.dt * (w_ext.n_samples - 1)
        norms = np.sqrt((w_ext.values**2).sum(axis=1) * w_ext.dt)
        artifacts["sigma_extended"] = norms
        artifacts["ext_horizon"] = horizon
        return traj, artifacts

    raise ConfigError(f"unknown basis kind '{basis_kind}'")


def _model_diagnostics(traj, artifacts):
    rows = {}
    model = artifacts["model"]
    for key, value in model.diagnostics.items():
        if isinstance(value, (int, float)):
            rows[key] = value
    window = artifacts.get("window_basis")
    if window is not None and window.v is not None and model.kind == "generator":
        defect = koopman.antisymmetry_defect_from_model(model, window)
        rows["antisymmetry_defect_max"] = float(np.abs(defect).max())
    k_ext = artifacts.get("k_extended")
    if k_ext is not None:
        sigma = artifacts["sigma_extended"]
        horizon = artifacts.get(
            "ext_horizon", traj.dt * (traj.n_samples - 1)
        )
        rows["truncation_error_rms"] = koopman.truncation_error_rms(
            k_ext, sigma, model.rank, horizon
        )
    return rows


def cmd_model(args):
    cfg = _merge_config(args, _MODEL_DEFAULTS)
    traj, artifacts = run_model_pipeline(cfg)
    model = artifacts["model"]
    out_dir = cfg["out"]
    os.makedirs(out_dir, exist_ok=True)

    dataio.write_model(out_dir, model)
    if "analytic_model" in artifacts:
        dataio.write_matrix_csv(
            os.path.join(out_dir, "model_operator_analytic.csv"),
            artifacts["analytic_model"].operator, "operator",
        )
    if "window_basis" in artifacts:
        dataio.write_svd_basis(out_dir, artifacts["window_basis"])
    if "coordinates" in artifacts:
        dataio.write_coordinates(
            os.path.join(out_dir, "coordinates.csv"), artifacts["coordinates"]
        )
        series = artifacts["coordinates"]
        eigfun = None
        if model.rank == series.rank and model.kind == "generator":
            eigfun = koopman.koopman_eigenfunctions(model, artifacts["native_series"])
            dataio.write_matrix_csv(
                os.path.join(out_dir, "eigenfunctions_re.csv"),
                eigfun.values.real, "eigenfunctions-re",
            )
            dataio.write_matrix_csv(
                os.path.join(out_dir, "eigenfunctions_im.csv"),
                eigfun.values.imag, "eigenfunctions-im",
            )

    diag = _model_diagnostics(traj, artifacts)
    growth = koopman.coefficient_growth(model.operator)
    dataio.write_matrix_csv(
        os.path.join(out_dir, "coefficient_growth.csv"), growth[None, :],
        "coefficient-growth",
    )
    with open(os.path.join(out_dir, "diagnostics.csv"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write("# convkoop-csv diagnostics v1\nkey,value\n")
        for key, value in sorted(diag.items()):
            fh.write(f"{key},{dataio._fmt(value)}\n")
        for key, value in sorted(artifacts["provenance"].items()):
            fh.write(f"{key},{value}\n")

    omega = model.continuous_eigenvalues()
    print(f"model rank {model.rank} ({model.kind}); "
          f"leading frequencies: "
          + ", ".join(f"{w:+.4f}" for w in sorted(omega.imag, reverse=True)[:4]))
    for key, value in sorted(diag.items()):
        print(f"  {key} = {value:.6e}")

    if not _as_bool(cfg["no_plots"]):
        plots.save_operator_heatmap(
            model.operator, os.path.join(out_dir, "operator.png"),
            title="Fitted operator",
        )
        plots.save_spectrum_overlay(
            traj.samples[0], traj.dt, omega.imag,
            os.path.join(out_dir, "spectrum_overlay.png"),
        )
        if "window_basis" in artifacts:
            basis = artifacts["window_basis"]
            plots.save_singular_values(
                basis.sigma, os.path.join(out_dir, "singular_values.png")
            )
        if "coordinates" in artifacts:
            series = artifacts["coordinates"]
            plots.save_coordinate_series(
                series.times, series.values,
                os.path.join(out_dir, "coordinates.png"),
            )
    return 0


_FORECAST_DEFAULTS = {
    "model_dir": ".",
    "horizon": 0,
    "out": "",
    "no_plots": False,
}


def cmd_forecast(args):
    cfg = _merge_config(args, _FORECAST_DEFAULTS)
    model_dir = cfg["model_dir"]
    coords_path = os.path.join(model_dir, "coordinates.csv")
    if not os.path.exists(coords_path):
        raise ConfigError(f"no coordinates.csv in {model_dir}; run `model` first")
    series = dataio.read_coordinates(coords_path)
    meta = dataio.read_keyvalues(os.path.join(model_dir, "model.meta"))
    operator = dataio.read_matrix_csv(os.path.join(model_dir, "model_operator.csv"))
    model = koopman.KoopmanModel(
        operator=operator,
        kind=meta["kind"],
        dt=float(meta["dt"]),
        eig=koopman.eig(operator),
    )
    horizon = _as_int(cfg, "horizon") or series.n_samples
    fc = koopman.forecast(model, series.values[:, 0], horizon)
    out_dir = cfg["out"] or model_dir
    os.makedirs(out_dir, exist_ok=True)
    out_path = os.path.join(out_dir, "forecast.csv")
    dataio.write_coordinates(out_path, embedding.CoordinateSeries(
        fc.values, series.dt, series.t0
    ))
    overlap = min(horizon, series.n_samples)
    rms = float(
        np.linalg.norm(fc.values[:, :overlap] - series.values[:, :overlap])
        / max(np.linalg.norm(series.values[:, :overlap]), 1e-30)
    )
    print(f"wrote {out_path}; relative RMS against stored coordinates "
          f"over {overlap} samples: {rms:.3e}")
    if not _as_bool(cfg["no_plots"]):
        times = series.t0 + series.dt * np.arange(horizon)
        plots.save_forecast_comparison(
            times[:overlap], series.values[0, :overlap], fc.values[0, :overlap],
            os.path.join(out_dir, "forecast.png"),
        )
    return 0


_VALIDATE_DEFAULTS = {
    "only": "",
    "seed": 1234,
    "out": ".",
    "quick": False,
}


def cmd_validate(args):
    cfg = _merge_config(args, _VALIDATE_DEFAULTS)
    names = [tok for tok in str(cfg["only"]).split(",") if tok] or None
    results = validate.run(
        names=names, seed=_as_int(cfg, "seed"), out_dir=cfg["out"]
    )
    return 0 if all(r.passed for r in results) else 1


def build_parser():
    parser = _Parser(
        prog="convkoop",
        description="Convolutional coordinates and Koopman operator models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common_sim(p):
        p.add_argument("--preset", choices=["linear", "vdp", "lorenz", "nls"])
        p.add_argument("--dt", type=float)
        p.add_argument("--t-final", dest="t_final", type=float)
        p.add_argument("--transient", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--mu", type=float)
        p.add_argument("--n-pairs", dest="n_pairs", type=int)
        p.add_argument("--omega-max", dest="omega_max", type=float)
        p.add_argument("--min-gap", dest="min_gap", type=float)
        p.add_argument("--n-grid", dest="n_grid", type=int)
        p.add_argument("--n-snapshots", dest="n_snapshots", type=int)
        p.add_argument("--x-half-width", dest="x_half_width", type=float)
        p.add_argument("--x0")
        p.add_argument("--config")
        p.add_argument("--out")

    p_sim = sub.add_parser("simulate", help="generate a benchmark trajectory CSV")
    add_common_sim(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    def add_embed_flags(p):
        add_common_sim(p)
        p.add_argument("--input", help="trajectory CSV instead of a preset")
        p.add_argument("--channel", help="measured channel index, 'sum', or 'all'")
        p.add_argument("--ndelays", type=int)
        p.add_argument("--rank", type=int)
        p.add_argument("--fast", action="store_const", const=True,
                       help="autocovariance fast path for the window basis")
        p.add_argument("--nmax", type=int, help="taylor order for --fast")
        p.add_argument("--no-plots", dest="no_plots", action="store_const", const=True)

    p_embed = sub.add_parser("embed", help="window basis from a trajectory")
    add_embed_flags(p_embed)
    p_embed.set_defaults(func=cmd_embed)

    p_model = sub.add_parser("model", help="fit an operator model and report")
    add_embed_flags(p_model)
    p_model.add_argument("--basis", choices=["svd", "fourier", "legendre"])
    p_model.add_argument("--method", choices=["havok", "dmd", "edmd"])
    p_model.add_argument("--dict", choices=["identity", "nls-cubic"]
                         + [f"poly{k}" for k in range(1, 11)])
    p_model.add_argument("--tail", type=int,
                         help="extra coordinates for the truncation-error bound")
    p_model.set_defaults(func=cmd_model)

    p_fc = sub.add_parser("forecast", help="propagate stored coordinates")
    p_fc.add_argument("--model-dir", dest="model_dir")
    p_fc.add_argument("--horizon", type=int)
    p_fc.add_argument("--out")
    p_fc.add_argument("--no-plots", dest="no_plots", action="store_const", const=True)
    p_fc.add_argument("--config")
    p_fc.set_defaults(func=cmd_forecast)

    p_val = sub.add_parser("validate", help="run the acceptance criteria")
    p_val.add_argument("--only", help="comma-separated criterion names or indices")
    p_val.add_argument("--seed", type=int)
    p_val.add_argument("--out")
    p_val.add_argument("--config")
    p_val.set_defaults(func=cmd_validate)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except (NumericFailure, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2
    except ContractError as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
