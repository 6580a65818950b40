"""Figure rendering for CLI reports. Matplotlib is imported lazily with the Agg backend."""

from __future__ import annotations

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


STYLE = {
    "figure.figsize": (6.4, 4.4),
    "font.size": 10,
    "axes.labelsize": 11,
    "legend.fontsize": 9,
    "legend.frameon": False,
    "lines.linewidth": 1.5,
}


def _save(fig, path):
    # fixed metadata keeps repeated runs byte-identical
    fig.savefig(path, dpi=120, metadata={"Software": None})
    _pyplot().close(fig)
    return path


def density_figure(hist, ps, path, tail_hist=None, title=None):
    """Averaged normalized density against the stationary state, linear and log-log panels."""
    plt = _pyplot()
    with plt.rc_context(STYLE):
        fig, (ax, axl) = plt.subplots(1, 2, figsize=(10, 4.2))
        finite = np.isfinite(hist.hi)
        ax.step(hist.lo[finite], hist.density[finite], where="post", label="Monte Carlo")
        w = np.linspace(1e-3, hist.hi[finite][-1], 600)
        ax.plot(w, ps.pdf(w), "k--", label=f"stationary, mu={ps.mu:g}")
        ax.set_xlabel("w / m(t)")
        ax.set_ylabel("density")
        ax.legend()
        src = tail_hist if tail_hist is not None else hist
        fin = np.isfinite(src.hi) & (src.masses > 0) & (src.lo > 0)
        axl.loglog(src.centers[fin], src.density[fin], "o", ms=3, label="Monte Carlo")
        wl = np.logspace(-2, 3, 400)
        axl.loglog(wl, ps.pdf(wl), "k--", label="stationary")
        axl.set_ylim(max(1e-9, src.density[fin].min() / 10) if fin.any() else 1e-9, None)
        axl.set_xlabel("w / m(t)")
        axl.legend()
        if title:
            fig.suptitle(title)
        fig.tight_layout()
        return _save(fig, path)


def growth_figure(t, m, path, m_se=None, bound_rate=None, title=None):
    """Mean wealth against kinetic time, optionally with the exponential growth bound."""
    plt = _pyplot()
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.semilogy(t, m, label="mean wealth")
        if m_se is not None and np.any(m_se > 0):
            ax.fill_between(t, np.maximum(m - 2 * m_se, 1e-300), m + 2 * m_se, alpha=0.3, lw=0)
        if bound_rate is not None:
            ax.semilogy(t, m[0] * np.exp(bound_rate * np.asarray(t)), "k:", label="growth bound")
        ax.set_xlabel("t (sweeps)")
        ax.set_ylabel("m(t)")
        ax.legend()
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)


def spread_figure(t, a_mean, a_se, curves, path, title=None):
    """Ensemble spread with error band and named ODE solutions."""
    plt = _pyplot()
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(t, a_mean, label="Monte Carlo ensemble")
        ax.fill_between(t, a_mean - 3 * a_se, a_mean + 3 * a_se, alpha=0.3, lw=0, label="3 s.e.")
        for name, values in curves.items():
            ax.plot(t, values, "--", label=name)
        ax.set_xlabel("t (sweeps)")
        ax.set_ylabel("A(t)")
        ax.legend()
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)


def fp_figure(grid, ps, path, history=None):
    plt = _pyplot()
    with plt.rc_context(STYLE):
        ncols = 2 if history is not None else 1
        fig, axes = plt.subplots(1, ncols, figsize=(5 * ncols, 4.2), squeeze=False)
        ax = axes[0, 0]
        ax.plot(grid.centers, grid.cell_averages, label="finite volume")
        ax.plot(grid.centers, ps.pdf(grid.centers), "k--", label=f"stationary, mu={ps.mu:g}")
        ax.set_xlim(0, min(grid.w_max, 10 * ps.m))
        ax.set_xlabel("w")
        ax.set_ylabel("g")
        ax.legend()
        if history is not None:
            axh = axes[0, 1]
            axh.semilogy(history[:, 1], history[:, 2])
            axh.set_xlabel("tau")
            axh.set_ylabel("L1 change per unit tau")
        fig.tight_layout()
        return _save(fig, path)
