"""Figure rendering for the report paths (fit reports, predictions, benchmarks).

All figures go straight to files via the Agg backend; nothing here opens a
window.  Figures are a convenience layer on top of the CSV outputs, which
remain the machine-readable contract.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 120


def _save(fig, path):
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)


def metrics_boxplot(rows, metric: str, path) -> None:
    """Boxplots of one metric by method, NaN (error) rows dropped."""
    methods = []
    for r in rows:
        if r.method not in methods:
            methods.append(r.method)
    data = [
        [getattr(r, metric) for r in rows
         if r.method == m and np.isfinite(getattr(r, metric))]
        for m in methods
    ]
    fig, ax = plt.subplots(figsize=(1.2 + 1.3 * len(methods), 3.4))
    ax.boxplot(data, tick_labels=methods)
    ax.set_ylabel(metric.upper())
    ax.grid(axis="y", alpha=0.3)
    _save(fig, path)


def prediction_plot_1d(x, mean, lower, upper, path, y_true=None,
                       x_train=None, y_train=None) -> None:
    """Predictive mean with central bounds along a single input."""
    x = np.asarray(x, dtype=float).ravel()
    order = np.argsort(x)
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    ax.fill_between(x[order], np.asarray(lower)[order], np.asarray(upper)[order],
                    alpha=0.25, lw=0, label="90% interval")
    ax.plot(x[order], np.asarray(mean)[order], lw=1.5, label="predictive mean")
    if y_true is not None:
        ax.plot(x[order], np.asarray(y_true)[order], "k--", lw=1, label="truth")
    if x_train is not None and y_train is not None:
        ax.plot(np.asarray(x_train).ravel(), y_train, "o", ms=4, mfc="none", label="train")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.legend(fontsize=8)
    _save(fig, path)


def sensitivity_plot(grid_x, sens, path) -> None:
    """Per-coordinate latent contributions nu_j F_j over the reference grid."""
    sens = np.atleast_2d(np.asarray(sens, dtype=float))
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    for j in range(sens.shape[1]):
        ax.plot(grid_x, sens[:, j], label=f"x{j + 1}")
    ax.set_xlabel("coded input")
    ax.set_ylabel("posterior mean of scaled latent")
    ax.legend(fontsize=8, ncol=2)
    _save(fig, path)


def trace_plot(series: dict, path) -> None:
    """Stacked trace plots of retained hyperparameter draws."""
    names = list(series)
    fig, axes = plt.subplots(len(names), 1, figsize=(5.2, 1.6 * len(names)),
                             sharex=True, squeeze=False)
    for ax, name in zip(axes[:, 0], names):
        vals = np.atleast_2d(np.asarray(series[name], dtype=float).T)
        for row in vals:
            ax.plot(row, lw=0.8)
        ax.set_ylabel(name)
    axes[-1, 0].set_xlabel("retained draw")
    _save(fig, path)


def warping_plot(queries, warps, path) -> None:
    """All retained monotone warpings per coordinate (mw-DGP diagnostics)."""
    warps = np.asarray(warps, dtype=float)  # (T, n_q, p)
    p = warps.shape[2]
    fig, axes = plt.subplots(1, p, figsize=(3.0 * p, 3.0), squeeze=False)
    for j, ax in enumerate(axes[0]):
        ax.plot(queries, warps[:, :, j].T, color="gray", lw=0.3, alpha=0.4)
        ax.plot([0, 1], [0, 1], "k--", lw=1)
        ax.set_xlabel(f"x{j + 1}")
        ax.set_ylabel(f"w{j + 1}")
    _save(fig, path)
