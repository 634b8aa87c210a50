"""Figure rendering for the CLI report path.

All functions write a file and return its path; matplotlib is imported
lazily with the Agg backend so the library itself never needs a display.
"""

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


def save_spectrum_overlay(signal, dt, omega_imag, path, title="Spectrum"):
    """Power spectrum of a measured channel with vertical lines at the
    recovered eigenfrequencies (imaginary parts of the spectrum)."""
    plt = _pyplot()
    signal = np.asarray(signal, dtype=float)
    amp = np.abs(np.fft.rfft(signal - signal.mean()))
    freq = 2.0 * np.pi * np.fft.rfftfreq(signal.shape[0], d=dt)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.semilogy(freq[1:], np.maximum(amp[1:], 1e-16), color="steelblue", lw=1.0,
                label="signal FFT")
    for i, w in enumerate(np.unique(np.abs(np.asarray(omega_imag)))):
        if w > 0:
            ax.axvline(w, color="crimson", lw=1.0, alpha=0.8,
                       label="model eigenfrequencies" if i == 0 else None)
    top = max(float(np.abs(omega_imag).max()) * 1.5, freq[min(len(freq) - 1, 50)])
    ax.set_xlim(0, top)
    ax.set_xlabel("angular frequency")
    ax.set_ylabel("amplitude")
    ax.set_title(title)
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_operator_heatmap(operator, path, title="Operator"):
    plt = _pyplot()
    operator = np.asarray(operator, dtype=float)
    vmax = float(np.abs(operator).max()) or 1.0
    fig, ax = plt.subplots(figsize=(5, 4.2))
    im = ax.imshow(operator, cmap="RdBu_r", vmin=-vmax, vmax=vmax)
    fig.colorbar(im, fraction=0.046, pad=0.04)
    ax.set_title(title)
    ax.set_xlabel("k")
    ax.set_ylabel("j")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_singular_values(sigma, path, title="Singular values"):
    plt = _pyplot()
    sigma = np.asarray(sigma, dtype=float)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogy(np.arange(1, sigma.shape[0] + 1), sigma, "o-", ms=4, color="k")
    ax.set_xlabel("index")
    ax.set_ylabel("sigma")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_window_functions(grid, u_columns, path, n_show=5, title="Window functions"):
    plt = _pyplot()
    u_columns = np.asarray(u_columns, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 3.8))
    for j in range(min(n_show, u_columns.shape[1])):
        ax.plot(grid, u_columns[:, j], lw=1.0, label=f"u{j}")
    ax.set_xlabel("window offset s")
    ax.set_title(title)
    ax.legend(fontsize=8, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_forecast_comparison(times, truth, prediction, path, label="w0",
                             title="Forecast"):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 3.8))
    if truth is not None:
        ax.plot(times, truth, color="k", lw=1.2, label=f"{label} (data)")
    ax.plot(times, prediction, color="crimson", lw=1.0, ls="--",
            label=f"{label} (model)")
    ax.set_xlabel("time")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_coordinate_series(series_times, values, path, n_show=4,
                           title="Convolutional coordinates"):
    plt = _pyplot()
    values = np.asarray(values, dtype=float)
    fig, ax = plt.subplots(figsize=(7, 3.8))
    for j in range(min(n_show, values.shape[0])):
        ax.plot(series_times, values[j], lw=0.8, label=f"w{j}")
    ax.set_xlabel("time")
    ax.set_title(title)
    ax.legend(fontsize=8, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
