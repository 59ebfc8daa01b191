"""Matplotlib figures for the CLI report path (non-interactive Agg backend)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

PARAMS = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.dpi": 150,
    "savefig.bbox": "tight",
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
}


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def wigner_map(grid, path: Path, title: str = "") -> Path:
    """Signed contrast C(x, p) as a diverging heatmap."""
    with plt.rc_context(PARAMS):
        fig, ax = plt.subplots(figsize=(3.4, 3.0))
        extent = [grid.x[0], grid.x[-1], grid.p[0], grid.p[-1]]
        im = ax.imshow(grid.values.T, origin="lower", extent=extent, cmap="RdBu_r",
                       vmin=-1, vmax=1, aspect="equal", interpolation="nearest")
        ax.set_xlabel(r"$x/\Delta x_0$")
        ax.set_ylabel(r"$p/\Delta p_0$")
        if title:
            ax.set_title(title)
        fig.colorbar(im, ax=ax, label=r"$C = \pi\hbar W$")
        return _save(fig, path)


def parity_bars(n, w, leakage, path: Path) -> Path:
    """Measured parity per Fock state against the ideal (-1)^n, with leakage."""
    n, w, leakage = map(np.asarray, (n, w, leakage))
    with plt.rc_context(PARAMS):
        fig, (ax, ax2) = plt.subplots(2, 1, figsize=(3.4, 3.6), sharex=True,
                                      gridspec_kw={"height_ratios": [2, 1]})
        ax.bar(n, w, color="tab:blue", label="simulated $w$")
        ax.plot(n, (-1.0) ** n, "k_", markersize=14, label="$(-1)^n$")
        ax.set_ylabel("parity $w$")
        ax.set_ylim(-1.1, 1.1)
        ax.legend(loc="lower center", bbox_to_anchor=(0.5, 1.0), ncol=2, frameon=False)
        ax2.semilogy(n, np.maximum(leakage, 1e-16), "o-", color="tab:red")
        ax2.set_ylabel("leakage")
        ax2.set_xlabel("Fock state $n$")
        return _save(fig, path)


def contrast_curve(hold_us, contrast, path: Path, collapse_us: float | None = None,
                   ground_fraction: float | None = None) -> Path:
    with plt.rc_context(PARAMS):
        fig, ax = plt.subplots(figsize=(3.4, 2.4))
        ax.plot(hold_us, contrast, "o-")
        if collapse_us is not None:
            ax.axvline(collapse_us, color="k", ls="--", lw=0.8, label="first collapse")
            ax.legend()
        ax.set_xlabel(r"hold time ($\mu$s)")
        ax.set_ylabel("Ramsey contrast")
        ax.set_ylim(0, 1.05)
        if ground_fraction is not None:
            ax.set_title(f"$P_0$ = {ground_fraction:g}")
        return _save(fig, path)


def spectrum_table(n, columns: dict, path: Path) -> Path:
    """Deviations of analytic spectra from diagonalisation, in units of hbar*omega."""
    with plt.rc_context(PARAMS):
        fig, ax = plt.subplots(figsize=(3.4, 2.4))
        for label, values in columns.items():
            ax.plot(n, values, "o-", label=label)
        ax.axhline(0, color="k", lw=0.6)
        ax.set_xlabel("level $n$")
        ax.set_ylabel(r"deviation ($\hbar\omega$)")
        ax.legend()
        return _save(fig, path)


def difference_map(diff, x, p, path: Path, title: str = "") -> Path:
    with plt.rc_context(PARAMS):
        fig, ax = plt.subplots(figsize=(3.4, 3.0))
        lim = max(float(np.nanmax(np.abs(diff))), 1e-12)
        im = ax.imshow(np.asarray(diff).T, origin="lower", extent=[x[0], x[-1], p[0], p[-1]],
                       cmap="PuOr", vmin=-lim, vmax=lim, interpolation="nearest")
        ax.set_xlabel(r"$x/\Delta x_0$")
        ax.set_ylabel(r"$p/\Delta p_0$")
        if title:
            ax.set_title(title)
        fig.colorbar(im, ax=ax, label=r"$\Delta C$")
        return _save(fig, path)
